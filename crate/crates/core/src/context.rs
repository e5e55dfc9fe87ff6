//! The bandit context observed for one (vehicle, base station) pair.

use crate::geometry::Point;
use crate::math;

/// Base-station identifier, i.e. an arm.
pub type ArmId = u32;

/// Five-component context: arm, bearing, distance, Doppler spread and the
/// concurrent-transmission count remembered from the last contact.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Context {
    /// Base station the context refers to.
    pub arm: ArmId,
    /// Bearing of the BS→vehicle vector from the positive x-axis, in `[0, 2π)`.
    pub theta: f64,
    /// Vehicle–BS distance in meters.
    pub dist: f64,
    /// Maximum Doppler spread in Hz (tangential speed over wavelength).
    pub doppler: f64,
    /// Vehicles served by the BS during the last period this vehicle used it.
    pub n_tx: u32,
}

impl Context {
    /// Context dimension.
    pub const DIM: usize = 5;

    /// Builds a context, wrapping `theta` into `[0, 2π)` and clamping the
    /// non-negative fields at zero.
    pub fn new(arm: ArmId, theta: f64, dist: f64, doppler: f64, n_tx: u32) -> Self {
        Context {
            arm,
            theta: wrap_angle(theta),
            dist: dist.max(0.0),
            doppler: doppler.max(0.0),
            n_tx,
        }
    }

    /// Vehicle location implied by this context relative to the BS at `bs`.
    pub fn location(&self, bs: Point) -> Point {
        Point::new(
            bs.x + self.dist * math::cos(self.theta),
            bs.y + self.dist * math::sin(self.theta),
        )
    }

    /// The numeric fields `(theta, dist, doppler, n_tx)` as a vector.
    pub fn features(&self) -> [f64; 4] {
        [self.theta, self.dist, self.doppler, self.n_tx as f64]
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    if (0.0..math::TAU).contains(&theta) {
        return theta;
    }
    if !theta.is_finite() {
        return 0.0;
    }
    let mut t = math::fmod(theta, math::TAU);
    if t < 0.0 {
        t += math::TAU;
    }
    // fmod of a tiny negative number can land exactly on 2π after the shift
    if t >= math::TAU {
        t = 0.0;
    }
    t
}

/// Circular distance between two angles, in `[0, π]`.
pub fn angle_between(a: f64, b: f64) -> f64 {
    let d = libm::fabs(wrap_angle(a) - wrap_angle(b));
    if d > math::PI {
        math::TAU - d
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{PI, TAU};

    #[test]
    fn wraps_theta() {
        let c = Context::new(0, -0.5, 10.0, 1.0, 0);
        assert!((c.theta - (TAU - 0.5)).abs() < 1e-12);
        let c = Context::new(0, 3.0 * TAU + 0.25, 10.0, 1.0, 0);
        assert!((c.theta - 0.25).abs() < 1e-12);
        assert!(Context::new(0, -1e-300, 1.0, 1.0, 0).theta < TAU);
    }

    #[test]
    fn clamps_negative_fields() {
        let c = Context::new(2, 0.0, -3.0, -1.0, 4);
        assert_eq!(c.dist, 0.0);
        assert_eq!(c.doppler, 0.0);
    }

    #[test]
    fn circular_difference() {
        assert!((angle_between(0.1, TAU - 0.1) - 0.2).abs() < 1e-12);
        assert!((angle_between(0.0, PI) - PI).abs() < 1e-12);
        assert!((angle_between(PI / 3.0, 0.0) - PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn location_round_trip() {
        let bs = Point::new(100.0, -50.0);
        let c = Context::new(0, PI / 2.0, 30.0, 0.0, 0);
        let p = c.location(bs);
        assert!((p.x - 100.0).abs() < 1e-9 && (p.y + 20.0).abs() < 1e-9);
    }
}
