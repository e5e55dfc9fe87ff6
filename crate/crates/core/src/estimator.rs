//! Kernel ridge estimate of the mean reward and its deviation.
//!
//! For a query `x` against samples `S` with rewards `r`:
//!
//! ```text
//! μ̂ = k(x,S)ᵀ (K + λI)⁻¹ r
//! σ̂ = λ^{-1/2} · sqrt(κ(x,x) − k(x,S)ᵀ (K + λI)⁻¹ k(x,S))
//! ```
//!
//! With no samples this gives `μ̂ = 0`, `σ̂ = λ^{-1/2}`.

use alloc::vec::Vec;

use crate::context::{ArmId, Context};
use crate::error::{Error, Result};
use crate::kernel::{CompositeKernel, KernelFn, KernelParams};
use crate::linalg::Cholesky;
use crate::math;

/// Estimated mean reward and standard deviation, both in reward units
/// except `sigma`, which is on the kernel scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    /// Estimated mean reward.
    pub mu: f64,
    /// Estimated standard deviation, `>= 0`.
    pub sigma: f64,
}

impl Estimate {
    /// Upper confidence index `μ̂ + α σ̂`.
    pub fn ucb(&self, alpha: f64) -> f64 {
        self.mu + alpha * self.sigma
    }
}

/// One-shot estimate with the composite kernel.
///
/// All samples must be on `x.arm`.
pub fn estimate(x: &Context, samples: &[(Context, f64)], p: &KernelParams) -> Result<Estimate> {
    estimate_with(x, samples, &CompositeKernel::new(*p), p.lambda_k, p.jitter)
}

/// One-shot estimate with any kernel: builds and factors `K + λI` from
/// scratch.
pub fn estimate_with<K: KernelFn>(
    x: &Context,
    samples: &[(Context, f64)],
    kernel: &K,
    lambda_k: f64,
    jitter: f64,
) -> Result<Estimate> {
    if let Some((bad, _)) = samples.iter().find(|(c, _)| c.arm != x.arm) {
        return Err(Error::ArmMismatch {
            expected: x.arm,
            found: bad.arm,
        });
    }
    let n = samples.len();
    let mut a = alloc::vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(&samples[i].0, &samples[j].0);
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
        a[i * n + i] += lambda_k;
    }
    let chol = Cholesky::factor(&a, n, jitter)?;
    let rewards: Vec<f64> = samples.iter().map(|(_, r)| *r).collect();
    let w = chol.forward(&rewards);
    let cross: Vec<f64> = samples.iter().map(|(c, _)| kernel.eval(x, c)).collect();
    Ok(from_factor(&chol, &w, &cross, kernel.eval(x, x), lambda_k))
}

fn from_factor(
    chol: &Cholesky,
    w: &[f64],
    cross: &[f64],
    self_sim: f64,
    lambda_k: f64,
) -> Estimate {
    let v = chol.forward(cross);
    let mu: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
    let explained: f64 = v.iter().map(|a| a * a).sum();
    let radicand = (self_sim - explained).max(0.0);
    Estimate {
        mu,
        sigma: math::sqrt(radicand / lambda_k),
    }
}

/// Cached factorization of `K + λI` for the samples of one arm.
///
/// Appending a sample costs `O(n²)`; a query costs `O(n²)`. The cache must
/// be rebuilt with [`ArmModel::rebuild`] whenever samples are removed.
#[derive(Debug, Clone)]
pub struct ArmModel<K> {
    arm: ArmId,
    kernel: K,
    lambda_k: f64,
    jitter: f64,
    contexts: Vec<Context>,
    rewards: Vec<f64>,
    chol: Cholesky,
    /// `L⁻¹ r`
    w: Vec<f64>,
}

impl<K: KernelFn> ArmModel<K> {
    /// Empty model for `arm`.
    pub fn new(arm: ArmId, kernel: K, lambda_k: f64, jitter: f64) -> Self {
        ArmModel {
            arm,
            kernel,
            lambda_k,
            jitter,
            contexts: Vec::new(),
            rewards: Vec::new(),
            chol: Cholesky::empty(),
            w: Vec::new(),
        }
    }

    /// Arm this model belongs to.
    pub fn arm(&self) -> ArmId {
        self.arm
    }

    /// Number of samples folded in.
    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    /// True when no sample has been added.
    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    /// Contexts in insertion order.
    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    /// Rewards in insertion order.
    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    /// Ridge regularizer.
    pub fn lambda_k(&self) -> f64 {
        self.lambda_k
    }

    /// Initial factorization jitter.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// The kernel in use.
    pub fn kernel(&self) -> &K {
        &self.kernel
    }

    /// Replaces all samples and refactors from scratch.
    pub fn rebuild<'a, I>(&mut self, samples: I) -> Result<()>
    where
        I: IntoIterator<Item = (&'a Context, f64)>,
    {
        let (contexts, rewards): (Vec<Context>, Vec<f64>) =
            samples.into_iter().map(|(c, r)| (*c, r)).unzip();
        if let Some(bad) = contexts.iter().find(|c| c.arm != self.arm) {
            return Err(Error::ArmMismatch {
                expected: self.arm,
                found: bad.arm,
            });
        }
        let n = contexts.len();
        let mut a = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = self.kernel.eval(&contexts[i], &contexts[j]);
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
            a[i * n + i] += self.lambda_k;
        }
        let chol = Cholesky::factor(&a, n, self.jitter)?;
        self.w = chol.forward(&rewards);
        self.chol = chol;
        self.contexts = contexts;
        self.rewards = rewards;
        Ok(())
    }

    /// Adds one sample. Falls back to a jittered refactor if the incremental
    /// update loses definiteness; if that fails too the model is left as it
    /// was and the error is returned.
    pub fn push(&mut self, ctx: &Context, reward: f64) -> Result<()> {
        if ctx.arm != self.arm {
            return Err(Error::ArmMismatch {
                expected: self.arm,
                found: ctx.arm,
            });
        }
        let cross: Vec<f64> = self
            .contexts
            .iter()
            .map(|c| self.kernel.eval(ctx, c))
            .collect();
        let diag = self.kernel.eval(ctx, ctx) + self.lambda_k;
        match self.chol.try_push(&cross, diag) {
            Ok(()) => {
                let n = self.chol.len() - 1;
                let s: f64 = (0..n).map(|k| self.chol.l(n, k) * self.w[k]).sum();
                self.w.push((reward - s) / self.chol.l(n, n));
                self.contexts.push(*ctx);
                self.rewards.push(reward);
                Ok(())
            }
            Err(d)
                if d.is_nan()
                    || d <= -((self.contexts.len() + 1) as f64)
                        * Cholesky::max_jitter(self.jitter) =>
            {
                // far beyond what jitter can repair
                Err(Error::NotPositiveDefinite {
                    pivot: self.contexts.len(),
                    jitter: self.chol.jitter(),
                })
            }
            Err(_) => {
                let mut contexts = core::mem::take(&mut self.contexts);
                let mut rewards = core::mem::take(&mut self.rewards);
                contexts.push(*ctx);
                rewards.push(reward);
                let out = self.rebuild(contexts.iter().zip(rewards.iter().copied()));
                if out.is_err() {
                    contexts.pop();
                    rewards.pop();
                    self.contexts = contexts;
                    self.rewards = rewards;
                }
                out
            }
        }
    }

    /// Keeps only the samples for which `keep(index)` is true, then refactors.
    pub fn retain_indices(&mut self, mut keep: impl FnMut(usize) -> bool) -> Result<()> {
        let contexts = core::mem::take(&mut self.contexts);
        let rewards = core::mem::take(&mut self.rewards);
        let kept: Vec<(Context, f64)> = contexts
            .into_iter()
            .zip(rewards)
            .enumerate()
            .filter(|(i, _)| keep(*i))
            .map(|(_, s)| s)
            .collect();
        self.rebuild(kept.iter().map(|(c, r)| (c, *r)))
    }

    /// Estimate at `x` from the cached factor.
    pub fn estimate(&self, x: &Context) -> Result<Estimate> {
        if x.arm != self.arm {
            return Err(Error::ArmMismatch {
                expected: self.arm,
                found: x.arm,
            });
        }
        let cross: Vec<f64> = self
            .contexts
            .iter()
            .map(|c| self.kernel.eval(x, c))
            .collect();
        Ok(from_factor(
            &self.chol,
            &self.w,
            &cross,
            self.kernel.eval(x, x),
            self.lambda_k,
        ))
    }

    /// `log det(I + K/λ)` over the first `m` samples.
    pub fn information_gain_prefix(&self, m: usize) -> f64 {
        let m = m.min(self.chol.len());
        (self.chol.logdet_prefix(m) - m as f64 * math::ln(self.lambda_k)).max(0.0)
    }

    /// `log det(I + K/λ)` over every sample in the model.
    pub fn information_gain(&self) -> f64 {
        let n = self.chol.len() as f64;
        (self.chol.logdet() - n * math::ln(self.lambda_k)).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_params() -> KernelParams {
        KernelParams {
            sigma_l: 50.0,
            sigma_f: 300.0,
            sigma_n: 5.0,
            lambda_k: 1.0,
            jitter: 1e-10,
        }
    }

    fn random_samples(rng: &mut ChaCha8Rng, n: usize, arm: ArmId) -> Vec<(Context, f64)> {
        (0..n)
            .map(|_| {
                let c = Context::new(
                    arm,
                    rng.random_range(0.0..1.0),
                    rng.random_range(50.0..200.0),
                    rng.random_range(0.0..600.0),
                    rng.random_range(0..6),
                );
                (c, rng.random_range(0.0..10.0))
            })
            .collect()
    }

    #[test]
    fn empty_prior() {
        let x = Context::new(0, 1.0, 10.0, 0.0, 0);
        let e = estimate(&x, &[], &unit_params()).unwrap();
        assert_eq!(e.mu, 0.0);
        assert_eq!(e.sigma, 1.0);
        let mut p = unit_params();
        p.lambda_k = 4.0;
        assert_eq!(estimate(&x, &[], &p).unwrap().sigma, 0.5);
    }

    #[test]
    fn single_sample_hand_solve() {
        let x = Context::new(0, 1.0, 10.0, 0.0, 0);
        let e = estimate(&x, &[(x, 5.0)], &unit_params()).unwrap();
        assert_relative_eq!(e.mu, 2.5, epsilon = 1e-14);
        assert_relative_eq!(e.sigma, core::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-14);
    }

    #[test]
    fn arm_mismatch_is_rejected() {
        let x = Context::new(0, 1.0, 10.0, 0.0, 0);
        let y = Context::new(1, 1.0, 10.0, 0.0, 0);
        assert_eq!(
            estimate(&x, &[(y, 1.0)], &unit_params()),
            Err(Error::ArmMismatch {
                expected: 0,
                found: 1
            })
        );
    }

    #[test]
    fn cached_model_matches_one_shot() {
        let p = unit_params();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples = random_samples(&mut rng, 25, 2);
        let mut model = ArmModel::new(2, CompositeKernel::new(p), p.lambda_k, p.jitter);
        for (c, r) in &samples {
            model.push(c, *r).unwrap();
        }
        for _ in 0..10 {
            let q = random_samples(&mut rng, 1, 2)[0].0;
            let a = model.estimate(&q).unwrap();
            let b = estimate(&q, &samples, &p).unwrap();
            assert_relative_eq!(a.mu, b.mu, max_relative = 1e-10, epsilon = 1e-12);
            assert_relative_eq!(a.sigma, b.sigma, max_relative = 1e-10, epsilon = 1e-12);
        }
        let ctxs: Vec<Context> = samples.iter().map(|s| s.0).collect();
        let k = crate::kernel::build_kernel_matrix(&ctxs, &p);
        let gain = crate::linalg::logdet_ridge(&k, p.lambda_k, p.jitter).unwrap();
        assert_relative_eq!(model.information_gain(), gain, max_relative = 1e-10);
    }

    #[test]
    fn duplicate_contexts_stay_factorable() {
        let p = unit_params();
        let x = Context::new(0, 0.5, 100.0, 10.0, 2);
        let mut model = ArmModel::new(0, CompositeKernel::new(p), p.lambda_k, p.jitter);
        let mut rewards = Vec::new();
        for i in 0..200 {
            let r = (i % 7) as f64;
            model.push(&x, r).unwrap();
            rewards.push(r);
        }
        let e = model.estimate(&x).unwrap();
        let mean = rewards.iter().sum::<f64>() / rewards.len() as f64;
        // n identical samples: μ̂ = n·mean/(n+λ)
        assert_relative_eq!(e.mu, 200.0 * mean / 201.0, max_relative = 1e-8);
        assert!(e.sigma > 0.0 && e.sigma < 0.1);
    }
}
