//! Per-vehicle DK-UCB agent: sample stores, candidate sets and UCB arm
//! selection.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::context::{ArmId, Context};
use crate::env::BaseStation;
use crate::error::{Error, Result};
use crate::estimator::{ArmModel, Estimate};
use crate::geometry::Point;
use crate::kernel::KernelFn;
use crate::math;

/// Identifier of a vehicle.
pub type VehicleId = u32;

/// Globally unique sample identity: who sampled it and when. Together with
/// the arm it is the de-duplication key for shared data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleKey {
    /// Vehicle that observed the reward.
    pub vehicle: VehicleId,
    /// Period of the observation.
    pub period: u32,
}

/// A `(context, reward)` observation with its origin.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sample {
    /// Where the sample came from.
    pub key: SampleKey,
    /// Context at sampling time.
    pub ctx: Context,
    /// Observed rate, bits/s.
    pub reward: f64,
}

/// Exploration weight policy.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum AlphaMode {
    /// Constant `α`, in reward units.
    Fixed(f64),
    /// `α = √λ‖θ*‖ + R·sqrt(4 ln(T/δ) + 2 log det(I + K/λ))`, with the
    /// log-determinant taken over the arm's current samples. `‖θ*‖`, `R` and
    /// `δ` have no observable values and must be supplied.
    Theoretical {
        /// Norm bound of the reward function.
        theta_norm: f64,
        /// Sub-Gaussian noise scale.
        noise_scale: f64,
        /// Failure probability.
        delta: f64,
        /// Horizon `T`.
        horizon: u32,
    },
}

/// Agent settings.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AgentConfig {
    /// Exploration weight.
    pub alpha: AlphaMode,
    /// Candidate radius, meters.
    pub r_max: f64,
    /// Ridge regularizer.
    pub lambda_k: f64,
    /// Initial factorization jitter.
    pub jitter: f64,
    /// Per-arm sample cap. When exceeded, already-synchronized samples farthest
    /// from the vehicle are dropped until a quarter of the room is free.
    /// `None` keeps everything.
    pub capacity: Option<usize>,
}

impl AgentConfig {
    /// Validates ranges.
    pub fn validate(&self) -> Result<()> {
        match self.alpha {
            AlphaMode::Fixed(a) if !(a.is_finite() && a >= 0.0) => {
                return Err(Error::config("agent.alpha", "must be finite and >= 0"))
            }
            AlphaMode::Theoretical { delta, horizon, .. } => {
                if !(delta > 0.0 && delta < 1.0) {
                    return Err(Error::config("agent.delta", "must lie in (0, 1)"));
                }
                if horizon == 0 {
                    return Err(Error::config("agent.horizon", "must be >= 1"));
                }
            }
            _ => {}
        }
        if !(self.r_max.is_finite() && self.r_max > 0.0) {
            return Err(Error::config("agent.r_max", "must be finite and > 0"));
        }
        if !(self.lambda_k.is_finite() && self.lambda_k > 0.0) {
            return Err(Error::config("kernel.lambda_k", "must be finite and > 0"));
        }
        if self.capacity == Some(0) {
            return Err(Error::config("agent.capacity", "must be >= 1"));
        }
        Ok(())
    }
}

/// Samples of one arm plus the synchronization boundary.
#[derive(Debug, Clone)]
pub struct ArmStore<K> {
    model: ArmModel<K>,
    keys: Vec<SampleKey>,
    key_set: BTreeSet<SampleKey>,
    /// Length of the prefix already synchronized.
    snapshot: usize,
    rejected: usize,
}

impl<K: KernelFn + Clone> ArmStore<K> {
    fn new(arm: ArmId, kernel: K, cfg: &AgentConfig) -> Self {
        ArmStore {
            model: ArmModel::new(arm, kernel, cfg.lambda_k, cfg.jitter),
            keys: Vec::new(),
            key_set: BTreeSet::new(),
            rejected: 0,
            snapshot: 0,
        }
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    /// True when empty.
    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Size of the synchronized prefix.
    pub fn snapshot(&self) -> usize {
        self.snapshot
    }

    /// Samples refused because adding them made `K + λI` indefinite even
    /// after jitter escalation.
    pub fn rejected(&self) -> usize {
        self.rejected
    }

    /// The cached estimator.
    pub fn model(&self) -> &ArmModel<K> {
        &self.model
    }

    /// Whether a sample with this key is held.
    pub fn contains(&self, key: &SampleKey) -> bool {
        self.key_set.contains(key)
    }

    /// Samples in insertion order.
    pub fn samples(&self) -> impl Iterator<Item = Sample> + '_ {
        self.keys
            .iter()
            .zip(self.model.contexts())
            .zip(self.model.rewards())
            .map(|((key, ctx), reward)| Sample {
                key: *key,
                ctx: *ctx,
                reward: *reward,
            })
    }

    /// Contexts added since the last synchronization.
    pub fn new_contexts(&self) -> &[Context] {
        &self.model.contexts()[self.snapshot..]
    }

    /// Samples added since the last synchronization.
    pub fn new_samples(&self) -> impl Iterator<Item = Sample> + '_ {
        self.samples().skip(self.snapshot)
    }

    fn push(&mut self, sample: Sample) -> Result<bool> {
        if self.key_set.contains(&sample.key) {
            return Ok(false);
        }
        match self.model.push(&sample.ctx, sample.reward) {
            Ok(()) => {}
            Err(Error::NotPositiveDefinite { .. }) => {
                self.rejected += 1;
                return Ok(false);
            }
            Err(e) => return Err(e),
        }
        self.keys.push(sample.key);
        self.key_set.insert(sample.key);
        Ok(true)
    }

    /// Refactors from `samples`, of which the first `synced` are marked as
    /// synchronized. Samples that would break definiteness are skipped.
    fn rebuild_from(&mut self, samples: Vec<Sample>, synced: usize) -> Result<()> {
        let model = &self.model;
        self.model = ArmModel::new(
            model.arm(),
            model.kernel().clone(),
            model.lambda_k(),
            model.jitter(),
        );
        self.keys.clear();
        self.key_set.clear();
        self.snapshot = 0;
        for (i, s) in samples.into_iter().enumerate() {
            self.push(s)?;
            if i < synced {
                self.snapshot = self.len();
            }
        }
        Ok(())
    }

    /// Keeps the synchronized samples nearest to `center` (and every
    /// unsynchronized one) so that at most `keep` remain where possible.
    fn trim(&mut self, keep: usize, center: &Context) -> Result<usize> {
        if self.len() <= keep {
            return Ok(0);
        }
        let excess = (self.len() - keep).min(self.snapshot);
        let dist: Vec<f64> = self.model.contexts()[..self.snapshot]
            .iter()
            .map(|c| context_distance(c, center))
            .collect();
        let mut order: Vec<usize> = (0..self.snapshot).collect();
        // farthest first, older first among equals
        order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
        let mut drop = alloc::vec![false; self.len()];
        for &i in &order[..excess] {
            drop[i] = true;
        }
        let synced = self.snapshot - excess;
        let kept: Vec<Sample> = self
            .samples()
            .enumerate()
            .filter(|(i, _)| !drop[*i])
            .map(|(_, s)| s)
            .collect();
        self.rebuild_from(kept, synced)?;
        Ok(excess)
    }

    fn evict(&mut self, capacity: usize, center: &Context) -> Result<usize> {
        if self.len() <= capacity {
            return Ok(0);
        }
        self.trim(capacity - capacity / 4, center)
    }
}

/// Distance between the vehicle locations implied by two contexts of the same
/// arm (both measured from that arm's base station).
pub fn context_distance(a: &Context, b: &Context) -> f64 {
    let pa = a.location(Point::default());
    let pb = b.location(Point::default());
    pa.dist(pb)
}

/// All samples a vehicle holds, one [`ArmStore`] per arm.
#[derive(Debug, Clone)]
pub struct SampleStore<K> {
    kernel: K,
    cfg: AgentConfig,
    arms: BTreeMap<ArmId, ArmStore<K>>,
}

impl<K: KernelFn + Clone> SampleStore<K> {
    /// Empty store.
    pub fn new(kernel: K, cfg: AgentConfig) -> Self {
        SampleStore {
            kernel,
            cfg,
            arms: BTreeMap::new(),
        }
    }

    /// Store for `arm`, if any sample was ever added.
    pub fn arm(&self, arm: ArmId) -> Option<&ArmStore<K>> {
        self.arms.get(&arm)
    }

    /// Total samples over all arms.
    pub fn len(&self) -> usize {
        self.arms.values().map(|a| a.len()).sum()
    }

    /// True when no arm holds samples.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn arm_mut(&mut self, arm: ArmId) -> &mut ArmStore<K> {
        let kernel = &self.kernel;
        let cfg = &self.cfg;
        self.arms
            .entry(arm)
            .or_insert_with(|| ArmStore::new(arm, kernel.clone(), cfg))
    }

    /// Appends a locally observed reward.
    pub fn record(&mut self, key: SampleKey, ctx: Context, reward: f64) -> Result<()> {
        if !(reward.is_finite() && reward >= 0.0) {
            return Err(Error::InvalidReward(reward));
        }
        self.arm_mut(ctx.arm).push(Sample { key, ctx, reward })?;
        Ok(())
    }

    /// Merges samples received from a base station into the synchronized
    /// prefix of `arm`, skipping keys already held. Returns how many were new.
    ///
    /// Must be called right after [`SampleStore::mark_synced`] (the new
    /// samples then belong to the prefix). When the capacity would be
    /// exceeded, the merged set is trimmed to the samples nearest `center`
    /// with a single refactorization.
    pub fn merge_shared(
        &mut self,
        arm: ArmId,
        samples: &[Sample],
        center: &Context,
    ) -> Result<usize> {
        if let Some(bad) = samples.iter().find(|s| s.ctx.arm != arm) {
            return Err(Error::ArmMismatch {
                expected: arm,
                found: bad.ctx.arm,
            });
        }
        let capacity = self.cfg.capacity;
        let store = self.arm_mut(arm);
        let mut seen = BTreeSet::new();
        let fresh: Vec<Sample> = samples
            .iter()
            .filter(|s| !store.contains(&s.key) && seen.insert(s.key))
            .copied()
            .collect();
        match capacity {
            Some(cap) if store.len() + fresh.len() > cap => {
                let all: Vec<Sample> = store.samples().chain(fresh.iter().copied()).collect();
                let dist: Vec<f64> = all
                    .iter()
                    .map(|s| context_distance(&s.ctx, center))
                    .collect();
                let mut order: Vec<usize> = (0..all.len()).collect();
                order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
                let mut keep = alloc::vec![false; all.len()];
                for &i in order.iter().take(cap - cap / 4) {
                    keep[i] = true;
                }
                let kept: Vec<Sample> = all
                    .into_iter()
                    .enumerate()
                    .filter(|(i, _)| keep[*i])
                    .map(|(_, s)| s)
                    .collect();
                let n = kept.len();
                store.rebuild_from(kept, n)?;
            }
            _ => {
                for s in &fresh {
                    store.push(*s)?;
                }
                store.snapshot = store.len();
            }
        }
        Ok(fresh.len())
    }

    /// Samples refused over the life of this store because they made
    /// `K + λI` indefinite.
    pub fn rejected(&self) -> usize {
        self.arms.values().map(|a| a.rejected).sum()
    }

    /// Moves the synchronization boundary of `arm` to the end of its store.
    pub fn mark_synced(&mut self, arm: ArmId) {
        let store = self.arm_mut(arm);
        store.snapshot = store.len();
    }

    /// Applies the per-arm capacity, evicting synchronized samples farthest
    /// from `center`. Returns the number evicted.
    pub fn enforce_capacity(&mut self, center: &Context) -> Result<usize> {
        match (self.cfg.capacity, self.arms.get_mut(&center.arm)) {
            (Some(cap), Some(store)) => store.evict(cap, center),
            _ => Ok(0),
        }
    }

    /// Kernel ridge estimate at `x`.
    pub fn estimate(&self, x: &Context) -> Result<Estimate> {
        match self.arms.get(&x.arm) {
            Some(store) => store.model.estimate(x),
            None => Ok(Estimate {
                mu: 0.0,
                sigma: math::sqrt(self.kernel.eval(x, x) / self.cfg.lambda_k),
            }),
        }
    }

    /// Exploration weight for `arm` under the configured mode.
    pub fn alpha(&self, arm: ArmId) -> f64 {
        match self.cfg.alpha {
            AlphaMode::Fixed(a) => a,
            AlphaMode::Theoretical {
                theta_norm,
                noise_scale,
                delta,
                horizon,
            } => {
                let gain = self
                    .arms
                    .get(&arm)
                    .map(|s| s.model.information_gain())
                    .unwrap_or(0.0);
                let log_term = 4.0 * math::ln(horizon as f64 / delta) + 2.0 * gain;
                math::sqrt(self.cfg.lambda_k) * theta_norm
                    + noise_scale * math::sqrt(log_term.max(0.0))
            }
        }
    }

    /// Agent settings.
    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }
}

/// Picks the candidate with the largest `μ̂ + α σ̂`; ties go to the lowest
/// arm id. Returns the index into `candidates` and the estimate used.
pub fn select_arm<K: KernelFn + Clone>(
    candidates: &[Context],
    store: &SampleStore<K>,
) -> Result<(usize, Estimate)> {
    let mut best: Option<(usize, f64, Estimate)> = None;
    for (i, c) in candidates.iter().enumerate() {
        let e = store.estimate(c)?;
        let ucb = e.ucb(store.alpha(c.arm));
        let better = match &best {
            None => true,
            Some((j, b, _)) => ucb > *b || (ucb == *b && c.arm < candidates[*j].arm),
        };
        if better {
            best = Some((i, ucb, e));
        }
    }
    best.map(|(i, _, e)| (i, e)).ok_or(Error::EmptyCandidates)
}

/// Context of a vehicle at `pos` moving with `vel` (m/s) as seen from `bs`.
pub fn context_for(
    pos: Point,
    vel: Point,
    bs: &BaseStation,
    wavelength: f64,
    n_tx: u32,
) -> Context {
    let rel = pos - bs.pos;
    let dist = rel.norm();
    let theta = math::atan2(rel.y, rel.x);
    let tangential = if dist > 0.0 {
        (vel.cross(rel) / dist).abs()
    } else {
        0.0
    };
    Context::new(bs.id, theta, dist, tangential / wavelength, n_tx)
}

/// One context per base station within `r_max` of `pos`. `n_tx` is looked up per station and defaults to 0.
pub fn candidate_set(
    pos: Point,
    vel: Point,
    stations: &[BaseStation],
    r_max: f64,
    wavelength: f64,
    n_tx: &BTreeMap<ArmId, u32>,
) -> Vec<Context> {
    stations
        .iter()
        .filter(|bs| bs.pos.dist(pos) <= r_max)
        .map(|bs| {
            context_for(
                pos,
                vel,
                bs,
                wavelength,
                n_tx.get(&bs.id).copied().unwrap_or(0),
            )
        })
        .collect()
}
