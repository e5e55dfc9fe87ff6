//! Dense symmetric positive-definite factorization.
//!
//! The lower factor is kept packed by rows so that a new row can be appended
//! in `O(n²)` when a sample is added to a store.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernel::KernelMatrix;
use crate::math;

/// Jitter escalations tried after the first failure (each ×10).
pub const JITTER_ESCALATIONS: usize = 3;

/// Lower Cholesky factor `L` with `A = L Lᵀ`, packed row by row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Cholesky {
    n: usize,
    packed: Vec<f64>,
    jitter: f64,
}

#[inline]
fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

impl Cholesky {
    /// Empty (0×0) factor.
    pub fn empty() -> Self {
        Cholesky::default()
    }

    /// Factors the row-major `n × n` symmetric matrix `a`.
    ///
    /// The first attempt adds nothing to the diagonal. On failure `jitter` is
    /// added and multiplied by 10 up to [`JITTER_ESCALATIONS`] times.
    pub fn factor(a: &[f64], n: usize, jitter: f64) -> Result<Self> {
        assert_eq!(a.len(), n * n, "matrix is not n x n");
        let mut extra = 0.0;
        let mut last_pivot = 0;
        for attempt in 0..=JITTER_ESCALATIONS + 1 {
            match Self::try_factor(a, n, extra) {
                Ok(c) => return Ok(c),
                Err(pivot) => last_pivot = pivot,
            }
            if attempt > JITTER_ESCALATIONS || jitter <= 0.0 {
                break;
            }
            extra = if extra == 0.0 { jitter } else { extra * 10.0 };
        }
        Err(Error::NotPositiveDefinite {
            pivot: last_pivot,
            jitter: extra,
        })
    }

    fn try_factor(a: &[f64], n: usize, extra: f64) -> core::result::Result<Self, usize> {
        let mut packed = Vec::with_capacity(row_start(n));
        for i in 0..n {
            let ri = row_start(i);
            for j in 0..=i {
                let rj = row_start(j);
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= packed[ri + k] * packed[rj + k];
                }
                if i == j {
                    s += extra;
                    if !(s.is_finite() && s > 0.0) {
                        return Err(i);
                    }
                    packed.push(math::sqrt(s));
                } else {
                    packed.push(s / packed[rj + j]);
                }
            }
        }
        Ok(Cholesky {
            n,
            packed,
            jitter: extra,
        })
    }

    /// Order of the factored matrix.
    pub fn len(&self) -> usize {
        self.n
    }

    /// True for the 0×0 factor.
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Diagonal jitter that was needed, 0 if none.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `L[i][j]` for `j <= i`.
    pub fn l(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j <= i);
        self.packed[row_start(i) + j]
    }

    /// Solves `L y = b`.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut y = Vec::with_capacity(self.n);
        for (i, bi) in b.iter().enumerate() {
            let ri = row_start(i);
            let row = &self.packed[ri..ri + i];
            let s = dot(row, &y);
            y.push((bi - s) / self.packed[ri + i]);
        }
        y
    }

    /// Solves `Lᵀ x = y`.
    pub fn backward(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.n);
        let mut x = y.to_vec();
        for i in (0..self.n).rev() {
            let ri = row_start(i);
            x[i] /= self.packed[ri + i];
            let xi = x[i];
            for (xk, l) in x[..i].iter_mut().zip(&self.packed[ri..ri + i]) {
                *xk -= l * xi;
            }
        }
        x
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.backward(&self.forward(b))
    }

    /// `log det A`.
    pub fn logdet(&self) -> f64 {
        (0..self.n)
            .map(|i| 2.0 * math::ln(self.packed[row_start(i) + i]))
            .sum()
    }

    /// `log det` of the leading `m × m` block, which the leading rows of `L`
    /// factor on their own.
    pub fn logdet_prefix(&self, m: usize) -> f64 {
        (0..m.min(self.n))
            .map(|i| 2.0 * math::ln(self.packed[row_start(i) + i]))
            .sum()
    }

    /// Appends one row/column to the factored matrix: `cross` holds the new
    /// off-diagonal entries against the existing rows, `diag` the new diagonal
    /// entry. The jitter already in use is added to `diag`.
    ///
    /// Fails without modifying `self` if the extended matrix is not positive
    /// definite.
    pub fn push(&mut self, cross: &[f64], diag: f64) -> Result<()> {
        self.try_push(cross, diag)
            .map_err(|_| Error::NotPositiveDefinite {
                pivot: self.n,
                jitter: self.jitter,
            })
    }

    /// Like [`Cholesky::push`] but reports the offending squared pivot on
    /// failure (non-positive or NaN).
    pub fn try_push(&mut self, cross: &[f64], diag: f64) -> core::result::Result<(), f64> {
        assert_eq!(cross.len(), self.n);
        let row = self.forward(cross);
        let d = diag + self.jitter - row.iter().map(|v| v * v).sum::<f64>();
        if !(d.is_finite() && d > 0.0) {
            return Err(d);
        }
        self.packed.extend_from_slice(&row);
        self.packed.push(math::sqrt(d));
        self.n += 1;
        Ok(())
    }

    /// Largest diagonal shift [`Cholesky::factor`] may add for a given
    /// initial jitter.
    pub fn max_jitter(jitter: f64) -> f64 {
        jitter * math::pow(10.0, JITTER_ESCALATIONS as f64)
    }
}

/// Dot product with eight partial sums, which lets the compiler keep the
/// loop pipelined and vectorized.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
        acc[4] += x[4] * y[4];
        acc[5] += x[5] * y[5];
        acc[6] += x[6] * y[6];
        acc[7] += x[7] * y[7];
    }
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    let s = [
        acc[0] + acc[4],
        acc[1] + acc[5],
        acc[2] + acc[6],
        acc[3] + acc[7],
    ];
    (s[0] + s[2]) + (s[1] + s[3]) + tail
}

/// `log det(I + K / λ)`, the information gain of a sample set.
///
/// Returns 0 for the 0×0 matrix. The result is clamped at 0 so round-off on
/// nearly empty sets cannot produce a negative gain.
pub fn logdet_ridge(k: &KernelMatrix, lambda_k: f64, jitter: f64) -> Result<f64> {
    let n = k.len();
    if n == 0 {
        return Ok(0.0);
    }
    let mut a: Vec<f64> = k.entries().iter().map(|v| v / lambda_k).collect();
    for i in 0..n {
        a[i * n + i] += 1.0;
    }
    let c = Cholesky::factor(&a, n, jitter)?;
    Ok(c.logdet().max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::Context;
    use crate::kernel::{build_kernel_matrix, KernelParams};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Determinant by cofactor expansion along the first row.
    fn cofactor_det(a: &[f64], n: usize) -> f64 {
        if n == 1 {
            return a[0];
        }
        let mut det = 0.0;
        for col in 0..n {
            let mut minor = Vec::with_capacity((n - 1) * (n - 1));
            for r in 1..n {
                for c in 0..n {
                    if c != col {
                        minor.push(a[r * n + c]);
                    }
                }
            }
            let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
            det += sign * a[col] * cofactor_det(&minor, n - 1);
        }
        det
    }

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let b: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut a = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = (0..n).map(|k| b[i * n + k] * b[j * n + k]).sum::<f64>();
            }
            a[i * n + i] += 0.1;
        }
        a
    }

    #[test]
    fn solve_matches_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 6;
        let a = random_spd(&mut rng, n);
        let c = Cholesky::factor(&a, n, 0.0).unwrap();
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 2.0).collect();
        let x = c.solve(&b);
        for i in 0..n {
            let ax: f64 = (0..n).map(|j| a[i * n + j] * x[j]).sum();
            assert_relative_eq!(ax, b[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn logdet_matches_cofactor_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = 5;
            let a = random_spd(&mut rng, n);
            let c = Cholesky::factor(&a, n, 0.0).unwrap();
            let oracle = cofactor_det(&a, n);
            assert!(oracle > 0.0);
            assert!((c.logdet() - libm::log(oracle)).abs() < 1e-9);
        }
    }

    #[test]
    fn push_equals_refactor() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 7;
        let a = random_spd(&mut rng, n);
        let full = Cholesky::factor(&a, n, 0.0).unwrap();
        let mut inc = Cholesky::empty();
        for i in 0..n {
            let cross: Vec<f64> = (0..i).map(|j| a[i * n + j]).collect();
            inc.push(&cross, a[i * n + i]).unwrap();
        }
        for i in 0..n {
            for j in 0..=i {
                assert_relative_eq!(inc.l(i, j), full.l(i, j), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn push_rejects_dependent_row() {
        let mut c = Cholesky::factor(&[1.0], 1, 0.0).unwrap();
        let before = c.clone();
        assert!(c.push(&[1.0], 1.0).is_err());
        assert_eq!(c, before);
    }

    #[test]
    fn jitter_rescues_singular_psd() {
        // rank one
        let a = [1.0, 1.0, 1.0, 1.0];
        assert!(Cholesky::factor(&a, 2, 0.0).is_err());
        let c = Cholesky::factor(&a, 2, 1e-10).unwrap();
        assert!(c.jitter() > 0.0 && c.jitter() <= 1e-7);
    }

    #[test]
    fn indefinite_matrix_reported() {
        let a = [1.0, 2.0, 2.0, 1.0];
        let err = Cholesky::factor(&a, 2, 1e-10).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { pivot: 1, .. }));
    }

    #[test]
    fn ridge_logdet_examples() {
        let p = KernelParams::default();
        let empty = build_kernel_matrix(&[], &p);
        assert_eq!(logdet_ridge(&empty, 1.0, 1e-10).unwrap(), 0.0);
        let one = build_kernel_matrix(&[Context::new(0, 0.0, 1.0, 1.0, 0)], &p);
        assert_relative_eq!(
            logdet_ridge(&one, 1.0, 1e-10).unwrap(),
            core::f64::consts::LN_2,
            epsilon = 1e-15
        );
    }
}
