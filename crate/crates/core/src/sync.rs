//! Event-triggered synchronization between vehicles and base stations.
//!
//! After receiving a reward on arm `a`, a vehicle synchronizes with `a` when
//!
//! ```text
//! |S_new| · [log det(I + K_all/λ) − log det(I + K_new/λ)] > D
//! ```
//!
//! or when its current location is more than `R_p` from the location of its
//! last synchronization with `a`. `S_new` are the samples gathered since the
//! last synchronization and `S_all` everything the vehicle holds for `a`.
//! During a synchronization the vehicle uploads `S_new` and downloads the
//! other vehicles' samples whose location is within `R_p` of its own.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::agent::{context_distance, Sample, SampleKey, SampleStore, VehicleId};
use crate::context::{ArmId, Context};
use crate::error::Result;
use crate::kernel::{build_kernel_matrix_with, CompositeKernel, KernelFn, KernelParams};
use crate::linalg::logdet_ridge;

/// Which information measure the trigger compares against `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TriggerMode {
    /// `|S_new| · log(det(I + K_all/λ) / det(I + K_new/λ))`.
    #[default]
    Printed,
    /// `|S_new| · log(det(I + K_all/λ) / det(I + K_old/λ))` where `S_old` is
    /// the synchronized prefix: the gain since the last synchronization.
    /// Not the default; offered for comparison.
    GainSinceSync,
}

/// Left-hand side of the trigger inequality, computed from scratch with the
/// composite kernel in [`TriggerMode::Printed`] form.
pub fn trigger_value(s_new: &[Context], s_all: &[Context], p: &KernelParams) -> Result<f64> {
    trigger_value_with(
        s_new,
        s_all,
        &CompositeKernel::new(*p),
        p.lambda_k,
        p.jitter,
    )
}

/// [`trigger_value`] for any kernel.
pub fn trigger_value_with<K: KernelFn>(
    s_new: &[Context],
    s_all: &[Context],
    kernel: &K,
    lambda_k: f64,
    jitter: f64,
) -> Result<f64> {
    if s_new.is_empty() {
        return Ok(0.0);
    }
    let all = logdet_ridge(&build_kernel_matrix_with(s_all, kernel), lambda_k, jitter)?;
    let new = logdet_ridge(&build_kernel_matrix_with(s_new, kernel), lambda_k, jitter)?;
    Ok(s_new.len() as f64 * (all - new))
}

/// Whether the trigger event fires: `trigger_value > D`. `D = ∞` never fires.
pub fn trigger(s_new: &[Context], s_all: &[Context], p: &KernelParams, d: f64) -> Result<bool> {
    Ok(trigger_value(s_new, s_all, p)? > d)
}

/// Trigger value for one arm of a vehicle's store, reusing the store's
/// cached factor for the `S_all` term.
pub fn store_trigger_value<K: KernelFn + Clone>(
    store: &SampleStore<K>,
    arm: ArmId,
    mode: TriggerMode,
) -> Result<f64> {
    let Some(arm_store) = store.arm(arm) else {
        return Ok(0.0);
    };
    let new = arm_store.new_contexts();
    if new.is_empty() {
        return Ok(0.0);
    }
    let model = arm_store.model();
    let all = model.information_gain();
    let reference = match mode {
        TriggerMode::Printed => {
            let cfg = store.config();
            logdet_ridge(
                &build_kernel_matrix_with(new, model.kernel()),
                cfg.lambda_k,
                cfg.jitter,
            )?
        }
        TriggerMode::GainSinceSync => model.information_gain_prefix(arm_store.snapshot()),
    };
    Ok(new.len() as f64 * (all - reference))
}

/// Keeps the pool entries whose implied vehicle location lies strictly
/// within `r_p` of the location implied by `center`.
pub fn subspace_filter(pool: &[Sample], center: &Context, r_p: f64) -> Vec<Sample> {
    pool.iter()
        .filter(|s| in_subspace(&s.ctx, center, r_p))
        .copied()
        .collect()
}

#[inline]
fn in_subspace(ctx: &Context, center: &Context, r_p: f64) -> bool {
    ctx.arm == center.arm && context_distance(ctx, center) < r_p
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct PoolEntry {
    sample: Sample,
    inserted_at: u32,
}

/// Samples aggregated at each base station from every synchronization.
#[derive(Debug, Clone, Default)]
pub struct BsStore {
    pools: BTreeMap<ArmId, Vec<PoolEntry>>,
    keys: BTreeMap<ArmId, BTreeSet<SampleKey>>,
}

impl BsStore {
    /// Empty store.
    pub fn new() -> Self {
        BsStore::default()
    }

    /// Inserts uploaded samples for `arm`; keys already present are skipped.
    /// Returns how many were inserted.
    pub fn insert(&mut self, arm: ArmId, samples: &[Sample], period: u32) -> usize {
        let pool = self.pools.entry(arm).or_default();
        let keys = self.keys.entry(arm).or_default();
        let mut n = 0;
        for s in samples {
            debug_assert_eq!(s.ctx.arm, arm);
            if keys.insert(s.key) {
                pool.push(PoolEntry {
                    sample: *s,
                    inserted_at: period,
                });
                n += 1;
            }
        }
        n
    }

    /// Number of samples held for `arm`.
    pub fn len(&self, arm: ArmId) -> usize {
        self.pools.get(&arm).map_or(0, Vec::len)
    }

    /// Total samples over all stations.
    pub fn total(&self) -> usize {
        self.pools.values().map(Vec::len).sum()
    }

    /// Whether `arm` holds a sample with `key`.
    pub fn contains(&self, arm: ArmId, key: &SampleKey) -> bool {
        self.keys.get(&arm).is_some_and(|k| k.contains(key))
    }

    /// Samples of `arm` contributed by vehicles other than `exclude` and
    /// inserted before `period`.
    pub fn pool(
        &self,
        arm: ArmId,
        exclude: VehicleId,
        period: u32,
    ) -> impl Iterator<Item = &Sample> {
        self.pools
            .get(&arm)
            .into_iter()
            .flatten()
            .filter(move |e| e.sample.key.vehicle != exclude && e.inserted_at < period)
            .map(|e| &e.sample)
    }
}

/// Last synchronization of a (vehicle, arm) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncRecord {
    /// Period of the last synchronization.
    pub t_syn: u32,
    /// Context at that synchronization.
    pub ctx: Context,
    /// Samples held for the arm right after it.
    pub count: usize,
}

/// Synchronization bookkeeping for every (vehicle, arm) pair.
#[derive(Debug, Clone, Default)]
pub struct SyncState {
    records: BTreeMap<(VehicleId, ArmId), SyncRecord>,
}

impl SyncState {
    /// Empty state.
    pub fn new() -> Self {
        SyncState::default()
    }

    /// Last synchronization of `vehicle` with `arm`.
    pub fn get(&self, vehicle: VehicleId, arm: ArmId) -> Option<&SyncRecord> {
        self.records.get(&(vehicle, arm))
    }

    /// Forgets a vehicle that left the map.
    pub fn remove_vehicle(&mut self, vehicle: VehicleId) {
        self.records.retain(|(v, _), _| *v != vehicle);
    }

    /// Distance between `ctx` and the context of the last synchronization,
    /// infinite if the pair never synchronized.
    pub fn drift(&self, vehicle: VehicleId, ctx: &Context) -> f64 {
        self.get(vehicle, ctx.arm)
            .map_or(f64::INFINITY, |r| context_distance(&r.ctx, ctx))
    }
}

/// Item counts of one synchronization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyncOutcome {
    /// Samples uploaded to the base station.
    pub uploaded: usize,
    /// Samples the base station held from other vehicles (eligible pool).
    pub eligible: usize,
    /// Eligible samples inside the context subspace.
    pub in_subspace: usize,
    /// Samples actually delivered (in the subspace and not already held).
    pub downloaded: usize,
}

impl SyncOutcome {
    /// Fraction of the eligible pool withheld by the subspace filter, `None`
    /// for an empty pool.
    pub fn sharing_efficiency(&self) -> Option<f64> {
        (self.eligible > 0).then(|| 1.0 - self.in_subspace as f64 / self.eligible as f64)
    }
}

/// Counters of one period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PeriodComm {
    /// Synchronizations.
    pub syncs: usize,
    /// Samples uploaded.
    pub uploaded: usize,
    /// Samples downloaded.
    pub downloaded: usize,
    /// Eligible pool sizes summed over syncs.
    pub eligible: usize,
    /// Eligible samples not sent thanks to the subspace filter.
    pub avoided_by_subspace: usize,
}

/// Communication ledger of a run.
#[derive(Debug, Clone, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CommLedger {
    periods: Vec<PeriodComm>,
    efficiency_sum: f64,
    efficiency_count: usize,
}

impl CommLedger {
    /// Empty ledger.
    pub fn new() -> Self {
        CommLedger::default()
    }

    /// Adds one synchronization at `period`.
    pub fn record(&mut self, period: u32, outcome: &SyncOutcome) {
        let idx = period as usize;
        if self.periods.len() <= idx {
            self.periods.resize(idx + 1, PeriodComm::default());
        }
        let row = &mut self.periods[idx];
        row.syncs += 1;
        row.uploaded += outcome.uploaded;
        row.downloaded += outcome.downloaded;
        row.eligible += outcome.eligible;
        row.avoided_by_subspace += outcome.eligible - outcome.in_subspace;
        if let Some(e) = outcome.sharing_efficiency() {
            self.efficiency_sum += e;
            self.efficiency_count += 1;
        }
    }

    /// Per-period counters, indexed by period.
    pub fn periods(&self) -> &[PeriodComm] {
        &self.periods
    }

    /// Counters summed over the run.
    pub fn totals(&self) -> PeriodComm {
        self.periods
            .iter()
            .fold(PeriodComm::default(), |mut acc, p| {
                acc.syncs += p.syncs;
                acc.uploaded += p.uploaded;
                acc.downloaded += p.downloaded;
                acc.eligible += p.eligible;
                acc.avoided_by_subspace += p.avoided_by_subspace;
                acc
            })
    }

    /// Mean over synchronizations with a nonempty pool of the fraction of
    /// the pool withheld; `None` if there was no such synchronization.
    pub fn sharing_efficiency(&self) -> Option<f64> {
        (self.efficiency_count > 0).then(|| self.efficiency_sum / self.efficiency_count as f64)
    }

    /// Fraction of the first `periods` periods with at least one
    /// synchronization.
    pub fn sync_rate(&self, periods: u32) -> f64 {
        if periods == 0 {
            return 0.0;
        }
        let active = self
            .periods
            .iter()
            .take(periods as usize)
            .filter(|p| p.syncs > 0)
            .count();
        active as f64 / periods as f64
    }
}

/// Protocol parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyncConfig {
    /// Trigger threshold `D`; `f64::INFINITY` disables the trigger.
    pub threshold: f64,
    /// Subspace radius `R_p`, meters; `f64::INFINITY` disables both the
    /// drift re-check and the download filter.
    pub r_p: f64,
    /// Information measure.
    pub mode: TriggerMode,
}

impl SyncConfig {
    /// Checks ranges.
    pub fn validate(&self) -> Result<()> {
        if self.threshold.is_nan() || self.threshold < 0.0 {
            return Err(crate::Error::config("sync.d", "must be >= 0 (inf allowed)"));
        }
        if self.r_p.is_nan() || self.r_p <= 0.0 {
            return Err(crate::Error::config(
                "sync.r_p",
                "must be > 0 (inf allowed)",
            ));
        }
        Ok(())
    }
}

/// Decides whether `vehicle` synchronizes on `ctx.arm` this period: the
/// trigger event fires or the vehicle drifted more than `R_p` since the last
/// synchronization (a pair that never synchronized has infinite drift).
pub fn should_sync<K: KernelFn + Clone>(
    vehicle: VehicleId,
    ctx: &Context,
    store: &SampleStore<K>,
    state: &SyncState,
    cfg: &SyncConfig,
) -> Result<bool> {
    if state.drift(vehicle, ctx) > cfg.r_p {
        return Ok(true);
    }
    if cfg.threshold == f64::INFINITY {
        return Ok(false);
    }
    Ok(store_trigger_value(store, ctx.arm, cfg.mode)? > cfg.threshold)
}

/// Runs one synchronization of `vehicle` with base station `ctx.arm` at
/// `period`: upload the new samples, download the other vehicles' samples
/// inside the subspace around `ctx`, and update the bookkeeping.
///
/// Only samples inserted at the base station before `period` are
/// downloadable, so uploads become visible to other vehicles next period.
#[allow(clippy::too_many_arguments)]
pub fn synchronize<K: KernelFn + Clone>(
    vehicle: VehicleId,
    ctx: &Context,
    period: u32,
    store: &mut SampleStore<K>,
    bs: &mut BsStore,
    state: &mut SyncState,
    ledger: &mut CommLedger,
    r_p: f64,
) -> Result<SyncOutcome> {
    let arm = ctx.arm;
    let new: Vec<Sample> = store
        .arm(arm)
        .map(|a| a.new_samples().collect())
        .unwrap_or_default();
    let uploaded = bs.insert(arm, &new, period);
    store.mark_synced(arm);

    let mut eligible = 0;
    let mut inside = Vec::new();
    for s in bs.pool(arm, vehicle, period) {
        eligible += 1;
        if in_subspace(&s.ctx, ctx, r_p) {
            inside.push(*s);
        }
    }
    let in_subspace_count = inside.len();
    if let Some(held) = store.arm(arm) {
        inside.retain(|s| !held.contains(&s.key));
    }
    if let Some(cap) = store.config().capacity {
        if inside.len() > cap {
            // only the nearest items could survive eviction anyway
            let mut keyed: Vec<(f64, Sample)> = inside
                .iter()
                .map(|s| (context_distance(&s.ctx, ctx), *s))
                .collect();
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.key.cmp(&b.1.key)));
            inside = keyed.into_iter().take(cap).map(|(_, s)| s).collect();
        }
    }
    let downloaded = store.merge_shared(arm, &inside, ctx)?;
    store.enforce_capacity(ctx)?;

    let count = store.arm(arm).map_or(0, |a| a.len());
    state.records.insert(
        (vehicle, arm),
        SyncRecord {
            t_syn: period,
            ctx: *ctx,
            count,
        },
    );
    let outcome = SyncOutcome {
        uploaded,
        eligible,
        in_subspace: in_subspace_count,
        downloaded,
    };
    ledger.record(period, &outcome);
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{AgentConfig, AlphaMode};
    use approx::assert_relative_eq;

    fn params() -> KernelParams {
        KernelParams {
            sigma_l: 50.0,
            sigma_f: 300.0,
            sigma_n: 5.0,
            lambda_k: 1.0,
            jitter: 1e-10,
        }
    }

    fn store() -> SampleStore<CompositeKernel> {
        SampleStore::new(
            CompositeKernel::new(params()),
            AgentConfig {
                alpha: AlphaMode::Fixed(1.0),
                r_max: 500.0,
                lambda_k: 1.0,
                jitter: 1e-10,
                capacity: None,
            },
        )
    }

    fn key(v: u32, t: u32) -> SampleKey {
        SampleKey {
            vehicle: v,
            period: t,
        }
    }

    #[test]
    fn empty_new_set_never_fires() {
        let x = Context::new(0, 0.0, 10.0, 0.0, 0);
        assert_eq!(trigger_value(&[], &[x], &params()).unwrap(), 0.0);
        assert!(!trigger(&[], &[x], &params(), 0.0).unwrap());
    }

    #[test]
    fn infinite_threshold_never_fires() {
        let xs: Vec<Context> = (0..5)
            .map(|i| Context::new(0, 0.0, 50.0 * i as f64, 0.0, 0))
            .collect();
        assert!(!trigger(&xs[3..], &xs, &params(), f64::INFINITY).unwrap());
    }

    #[test]
    fn two_sample_hand_value() {
        // pick x2 so that κ(x1, x2) = 0.5 exactly through the bearing term
        let x1 = Context::new(0, 0.0, 100.0, 0.0, 0);
        let x2 = Context::new(0, core::f64::consts::FRAC_PI_3, 100.0, 0.0, 0);
        assert_relative_eq!(
            crate::kernel::kernel(&x1, &x2, &params()),
            0.5,
            epsilon = 1e-12
        );
        let v = trigger_value(&[x2], &[x1, x2], &params()).unwrap();
        // log det([[2, .5], [.5, 2]]) − log 2 = log(3.75 / 2)
        assert_relative_eq!(v, libm::log(3.75 / 2.0), epsilon = 1e-12);
        assert_relative_eq!(v, 0.628_608_659_422_374_1, epsilon = 1e-12);
        assert!(trigger(&[x2], &[x1, x2], &params(), 0.62).unwrap());
        assert!(!trigger(&[x2], &[x1, x2], &params(), 0.63).unwrap());
    }

    #[test]
    fn cached_trigger_matches_scratch() {
        let mut s = store();
        let xs: Vec<Context> = (0..9)
            .map(|i| {
                Context::new(
                    1,
                    0.1 * i as f64,
                    40.0 + 7.0 * i as f64,
                    10.0 * i as f64,
                    i % 3,
                )
            })
            .collect();
        for (i, x) in xs[..6].iter().enumerate() {
            s.record(key(0, i as u32), *x, 1.0).unwrap();
        }
        s.mark_synced(1);
        for (i, x) in xs[6..].iter().enumerate() {
            s.record(key(0, 6 + i as u32), *x, 1.0).unwrap();
        }
        let cached = store_trigger_value(&s, 1, TriggerMode::Printed).unwrap();
        let scratch = trigger_value(&xs[6..], &xs, &params()).unwrap();
        assert_relative_eq!(cached, scratch, max_relative = 1e-10);

        let gain = store_trigger_value(&s, 1, TriggerMode::GainSinceSync).unwrap();
        let p = params();
        let all = logdet_ridge(&crate::kernel::build_kernel_matrix(&xs, &p), 1.0, 1e-10).unwrap();
        let old = logdet_ridge(
            &crate::kernel::build_kernel_matrix(&xs[..6], &p),
            1.0,
            1e-10,
        )
        .unwrap();
        assert_relative_eq!(gain, 3.0 * (all - old), max_relative = 1e-10);
    }

    #[test]
    fn strict_radius() {
        let center = Context::new(0, 0.0, 100.0, 0.0, 0);
        let same = Sample {
            key: key(1, 0),
            ctx: center,
            reward: 1.0,
        };
        let edge = Sample {
            key: key(1, 1),
            ctx: Context::new(0, 0.0, 150.0, 0.0, 0),
            reward: 1.0,
        };
        let kept = subspace_filter(&[same, edge], &center, 50.0);
        assert_eq!(kept, alloc::vec![same]);
    }

    #[test]
    fn first_sync_uploads_only() {
        let mut s = store();
        let mut bs = BsStore::new();
        let mut state = SyncState::new();
        let mut ledger = CommLedger::new();
        let x = Context::new(0, 0.0, 100.0, 0.0, 0);
        s.record(key(0, 0), x, 2.0).unwrap();
        let out = synchronize(0, &x, 0, &mut s, &mut bs, &mut state, &mut ledger, 50.0).unwrap();
        assert_eq!(
            out,
            SyncOutcome {
                uploaded: 1,
                eligible: 0,
                in_subspace: 0,
                downloaded: 0
            }
        );
        assert_eq!(bs.len(0), 1);
        assert_eq!(state.get(0, 0).unwrap().t_syn, 0);
        assert_eq!(ledger.totals().syncs, 1);
        assert_eq!(ledger.sharing_efficiency(), None);
    }

    #[test]
    fn alternating_vehicles_share_one_item() {
        let mut a = store();
        let mut b = store();
        let mut bs = BsStore::new();
        let mut state = SyncState::new();
        let mut ledger = CommLedger::new();
        let x = Context::new(0, 0.0, 100.0, 0.0, 0);
        a.record(key(0, 1), x, 2.0).unwrap();
        let first = synchronize(0, &x, 1, &mut a, &mut bs, &mut state, &mut ledger, 50.0).unwrap();
        assert_eq!(first.downloaded, 0);
        b.record(key(1, 2), x, 3.0).unwrap();
        let second = synchronize(1, &x, 2, &mut b, &mut bs, &mut state, &mut ledger, 50.0).unwrap();
        assert_eq!(second.downloaded, 1);
        assert_eq!(second.uploaded, 1);
        assert_eq!(b.arm(0).unwrap().len(), 2);
        // a re-sync downloads b's sample once, and only once
        let third = synchronize(0, &x, 3, &mut a, &mut bs, &mut state, &mut ledger, 50.0).unwrap();
        assert_eq!((third.uploaded, third.downloaded), (0, 1));
        let fourth = synchronize(0, &x, 4, &mut a, &mut bs, &mut state, &mut ledger, 50.0).unwrap();
        assert_eq!((fourth.in_subspace, fourth.downloaded), (1, 0));
        assert_eq!(ledger.totals().uploaded, bs.total());
    }

    #[test]
    fn same_period_uploads_are_not_downloadable() {
        let mut a = store();
        let mut b = store();
        let mut bs = BsStore::new();
        let mut state = SyncState::new();
        let mut ledger = CommLedger::new();
        let x = Context::new(0, 0.0, 100.0, 0.0, 0);
        a.record(key(0, 5), x, 2.0).unwrap();
        b.record(key(1, 5), x, 2.0).unwrap();
        synchronize(0, &x, 5, &mut a, &mut bs, &mut state, &mut ledger, 50.0).unwrap();
        let out = synchronize(1, &x, 5, &mut b, &mut bs, &mut state, &mut ledger, 50.0).unwrap();
        assert_eq!(out.eligible, 0);
    }

    #[test]
    fn seventy_percent_filtered() {
        let mut bs = BsStore::new();
        let center = Context::new(0, 0.0, 100.0, 0.0, 0);
        let mut pool = Vec::new();
        for i in 0..100u32 {
            let dist = if i < 30 {
                100.0 + (i as f64)
            } else {
                400.0 + i as f64
            };
            pool.push(Sample {
                key: key(9, i),
                ctx: Context::new(0, 0.0, dist, 0.0, 0),
                reward: 1.0,
            });
        }
        bs.insert(0, &pool, 0);
        let mut s = store();
        let mut state = SyncState::new();
        let mut ledger = CommLedger::new();
        let out = synchronize(
            0,
            &center,
            1,
            &mut s,
            &mut bs,
            &mut state,
            &mut ledger,
            50.0,
        )
        .unwrap();
        assert_eq!(out.eligible, 100);
        assert_eq!(out.in_subspace, 30);
        assert_relative_eq!(out.sharing_efficiency().unwrap(), 0.70, epsilon = 1e-12);
        assert_relative_eq!(ledger.sharing_efficiency().unwrap(), 0.70, epsilon = 1e-12);
        assert_eq!(ledger.totals().avoided_by_subspace, 70);
    }

    #[test]
    fn drift_recheck() {
        let mut s = store();
        let mut bs = BsStore::new();
        let mut state = SyncState::new();
        let mut ledger = CommLedger::new();
        let cfg = SyncConfig {
            threshold: f64::INFINITY,
            r_p: 50.0,
            mode: TriggerMode::Printed,
        };
        let x = Context::new(0, 0.0, 100.0, 0.0, 0);
        // never synchronized: infinite drift
        assert!(should_sync(0, &x, &s, &state, &cfg).unwrap());
        synchronize(0, &x, 0, &mut s, &mut bs, &mut state, &mut ledger, cfg.r_p).unwrap();
        assert!(!should_sync(0, &x, &s, &state, &cfg).unwrap());
        let far = Context::new(0, 0.0, 151.0, 0.0, 0);
        assert!(should_sync(0, &far, &s, &state, &cfg).unwrap());
        let never = SyncConfig {
            threshold: f64::INFINITY,
            r_p: f64::INFINITY,
            mode: TriggerMode::Printed,
        };
        assert!(!should_sync(1, &far, &s, &SyncState::new(), &never).unwrap());
    }

    #[test]
    fn sync_rate_counts_active_periods() {
        let mut l = CommLedger::new();
        let o = SyncOutcome::default();
        l.record(0, &o);
        l.record(0, &o);
        l.record(3, &o);
        assert_relative_eq!(l.sync_rate(4), 0.5, epsilon = 1e-15);
        assert_eq!(l.sync_rate(0), 0.0);
    }
}
