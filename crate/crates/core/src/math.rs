//! Float helpers routed through `libm` so results are identical with and
//! without `std`.

pub(crate) use core::f64::consts::{PI, TAU};

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}
#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub(crate) fn log2(x: f64) -> f64 {
    libm::log2(x)
}
#[inline]
pub(crate) fn log10(x: f64) -> f64 {
    libm::log10(x)
}
#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}
#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}
#[inline]
pub(crate) fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}
#[inline]
pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}
#[inline]
pub(crate) fn pow(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}
#[inline]
pub(crate) fn fmod(x: f64, y: f64) -> f64 {
    libm::fmod(x, y)
}

/// Decibels to a linear power ratio.
#[inline]
pub(crate) fn db_to_linear(db: f64) -> f64 {
    pow(10.0, db / 10.0)
}

#[allow(dead_code)]
#[inline]
pub(crate) fn linear_to_db(x: f64) -> f64 {
    10.0 * log10(x)
}
