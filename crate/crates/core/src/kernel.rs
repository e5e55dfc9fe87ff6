//! Composite context kernel and kernel matrices.
//!
//! For two contexts on the same arm the kernel is the product of four
//! one-dimensional similarities:
//!
//! * bearing: truncated cosine of the circular angle difference,
//! * distance: Gaussian,
//! * Doppler spread: exponential (Laplacian),
//! * concurrent transmissions: triangular.
//!
//! Contexts on different arms have similarity 0. Every component equals 1 at
//! identical inputs and is bounded by 1, so `kernel(x, x) == 1`.
//!
//! The truncated cosine is not positive semi-definite on its own over the
//! whole circle. Combined with the other factors at realistic bandwidths the
//! kernel matrices stay PSD up to round-off, and the factorization in
//! [`crate::linalg`] escalates a diagonal jitter when they do not.

use alloc::vec::Vec;

use crate::context::{angle_between, Context};
use crate::error::{Error, Result};
use crate::math;

/// Bandwidths of the composite kernel plus the ridge regularizer.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KernelParams {
    /// Gaussian bandwidth on distance, meters.
    pub sigma_l: f64,
    /// Exponential bandwidth on Doppler spread, Hz.
    pub sigma_f: f64,
    /// Triangular half-width on the concurrent-transmission count.
    pub sigma_n: f64,
    /// Ridge regularizer.
    pub lambda_k: f64,
    /// Initial diagonal jitter used when a factorization fails.
    pub jitter: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            sigma_l: 40.0,
            sigma_f: 1000.0,
            sigma_n: 6.0,
            lambda_k: 0.5,
            jitter: 1e-10,
        }
    }
}

impl KernelParams {
    /// Checks strict positivity of the bandwidths and regularizer.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("kernel.sigma_l", self.sigma_l),
            ("kernel.sigma_f", self.sigma_f),
            ("kernel.sigma_n", self.sigma_n),
            ("kernel.lambda_k", self.lambda_k),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(field, "must be finite and > 0"));
            }
        }
        if !(self.jitter.is_finite() && self.jitter >= 0.0) {
            return Err(Error::config("kernel.jitter", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Bearing similarity: `cos Δθ` for `Δθ < π/2`, else 0, with `Δθ` the
/// circular difference in `[0, π]`.
pub fn k_theta(theta_a: f64, theta_b: f64) -> f64 {
    let d = angle_between(theta_a, theta_b);
    if d < math::PI / 2.0 {
        math::cos(d).max(0.0)
    } else {
        0.0
    }
}

/// Gaussian similarity on distance.
pub fn k_l(l_a: f64, l_b: f64, sigma_l: f64) -> f64 {
    let d = l_a - l_b;
    math::exp(-(d * d) / (2.0 * sigma_l * sigma_l))
}

/// Exponential similarity on Doppler spread.
pub fn k_f(f_a: f64, f_b: f64, sigma_f: f64) -> f64 {
    math::exp(-(f_a - f_b).abs() / sigma_f)
}

/// Triangular similarity on the concurrent-transmission count.
pub fn k_n(n_a: f64, n_b: f64, sigma_n: f64) -> f64 {
    (1.0 - (n_a - n_b).abs() / sigma_n).max(0.0)
}

/// A similarity function over contexts.
///
/// Implementations must be symmetric, bounded by 1, equal to 1 on the
/// diagonal and zero across arms.
pub trait KernelFn {
    /// `κ(x, y)`.
    fn eval(&self, x: &Context, y: &Context) -> f64;
}

impl<K: KernelFn + ?Sized> KernelFn for &K {
    fn eval(&self, x: &Context, y: &Context) -> f64 {
        (**self).eval(x, y)
    }
}

/// Product of the four component kernels, zero across arms.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompositeKernel {
    /// Bandwidths.
    pub params: KernelParams,
}

impl CompositeKernel {
    /// Wraps a parameter set.
    pub fn new(params: KernelParams) -> Self {
        CompositeKernel { params }
    }
}

impl KernelFn for CompositeKernel {
    fn eval(&self, x: &Context, y: &Context) -> f64 {
        kernel(x, y, &self.params)
    }
}

/// Composite similarity between two contexts.
pub fn kernel(x: &Context, y: &Context, p: &KernelParams) -> f64 {
    if x.arm != y.arm {
        return 0.0;
    }
    let d = angle_between(x.theta, y.theta);
    if d >= math::PI / 2.0 {
        return 0.0;
    }
    let kn = k_n(x.n_tx as f64, y.n_tx as f64, p.sigma_n);
    if kn == 0.0 {
        return 0.0;
    }
    // k_L · k_f folded into one exponential
    let dl = x.dist - y.dist;
    let e = -(dl * dl) / (2.0 * p.sigma_l * p.sigma_l) - (x.doppler - y.doppler).abs() / p.sigma_f;
    math::cos(d).max(0.0) * math::exp(e) * kn
}

/// Single isotropic Gaussian on the raw numeric fields
/// `(theta, dist, doppler, n_tx)`, zero across arms. Used by the
/// Gaussian-kernel baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaussianKernel {
    /// Bandwidth.
    pub sigma: f64,
}

impl KernelFn for GaussianKernel {
    fn eval(&self, x: &Context, y: &Context) -> f64 {
        if x.arm != y.arm {
            return 0.0;
        }
        let a = x.features();
        let b = y.features();
        let sq: f64 = a.iter().zip(b.iter()).map(|(u, v)| (u - v) * (u - v)).sum();
        math::exp(-sq / (2.0 * self.sigma * self.sigma))
    }
}

/// Dense symmetric kernel matrix together with the contexts indexing it.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    entries: Vec<f64>,
    order: Vec<Context>,
}

impl KernelMatrix {
    /// Matrix order.
    pub fn len(&self) -> usize {
        self.order.len()
    }

    /// True for the 0×0 matrix.
    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Entry `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.len() + j]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Contexts indexing rows and columns.
    pub fn order(&self) -> &[Context] {
        &self.order
    }
}

/// Builds `K[i][j] = κ(S[i], S[j])` with the composite kernel.
pub fn build_kernel_matrix(set: &[Context], p: &KernelParams) -> KernelMatrix {
    build_kernel_matrix_with(set, &CompositeKernel::new(*p))
}

/// Builds a kernel matrix for an arbitrary kernel.
pub fn build_kernel_matrix_with<K: KernelFn>(set: &[Context], k: &K) -> KernelMatrix {
    let n = set.len();
    let mut entries = alloc::vec![0.0; n * n];
    for i in 0..n {
        entries[i * n + i] = k.eval(&set[i], &set[i]);
        for j in 0..i {
            let v = k.eval(&set[i], &set[j]);
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    KernelMatrix {
        entries,
        order: set.to_vec(),
    }
}
