//! Seeded scenario runner: drives a world and a policy through the
//! per-period phase order and collects per-vehicle rows and aggregates.
//!
//! Phase order within one period:
//!
//! 1. mobility (departures, then arrivals)
//! 2. link update (blockage, path loss, fading)
//! 3. candidate contexts
//! 4. policy decision, giving the association
//! 5. realized and counterfactual best rates under that association
//! 6. feedback (sample recording and synchronization, serial)
//! 7. remembered loads updated
//!
//! Mobility, fading and policy randomness come from separate ChaCha8
//! streams of the same seed, so swapping the policy leaves the traffic and
//! channel traces untouched.

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agent::{AgentConfig, AlphaMode};
use crate::baselines::{
    check_association, DkUcbPolicy, HypercubeConfig, HypercubePolicy, Observation, Policy,
    RandomPolicy, WcsPolicy,
};
use crate::context::ArmId;
use crate::env::{World, WorldConfig};
use crate::error::{Error, Result};
use crate::kernel::{CompositeKernel, GaussianKernel, KernelParams};
use crate::sync::{SyncConfig, TriggerMode};

/// RNG stream used for mobility.
pub const STREAM_MOBILITY: u64 = 1;
/// RNG stream used for fading.
pub const STREAM_FADING: u64 = 2;
/// RNG stream used by randomized policies.
pub const STREAM_POLICY: u64 = 3;

/// Independent stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Which policy to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum PolicyKind {
    /// Distributed kernel UCB with the composite kernel.
    Dkucb,
    /// Same learner with a single Gaussian kernel on raw features.
    GausKernel,
    /// Hypercube-partition contextual UCB.
    Hypercube,
    /// Uniform random candidate.
    Random,
    /// Centralized worst-connection swapping with full channel state.
    Wcs,
}

impl PolicyKind {
    /// All policies.
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Dkucb,
        PolicyKind::GausKernel,
        PolicyKind::Hypercube,
        PolicyKind::Random,
        PolicyKind::Wcs,
    ];

    /// Identifier used in configs and on the command line.
    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::Dkucb => "dkucb",
            PolicyKind::GausKernel => "gaus-kernel",
            PolicyKind::Hypercube => "hypercube",
            PolicyKind::Random => "random",
            PolicyKind::Wcs => "wcs",
        }
    }

    /// Inverse of [`PolicyKind::as_str`].
    pub fn parse(s: &str) -> Option<Self> {
        PolicyKind::ALL.into_iter().find(|p| p.as_str() == s)
    }
}

/// Everything a run needs.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunConfig {
    /// World model.
    pub world: WorldConfig,
    /// Policy.
    pub policy: PolicyKind,
    /// Horizon `T`, periods.
    pub periods: u32,
    /// Master seed.
    pub seed: u64,
    /// Composite kernel parameters; `lambda_k` and `jitter` also apply to
    /// the Gaussian variant.
    pub kernel: KernelParams,
    /// Exploration weight.
    pub alpha: AlphaMode,
    /// Candidate radius, meters.
    pub r_max: f64,
    /// Per-arm sample cap of each vehicle.
    pub capacity: Option<usize>,
    /// Synchronization trigger.
    pub sync: SyncConfig,
    /// Bandwidth of the single Gaussian kernel.
    pub sigma_gaus: f64,
    /// Hypercube partition.
    pub hypercube: HypercubeConfig,
    /// Move cap of worst-connection swapping.
    pub wcs_max_iters: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        // bandwidths from a tuning sweep on the default grid
        let kernel = KernelParams {
            sigma_l: 150.0,
            sigma_f: 300.0,
            sigma_n: 12.0,
            ..KernelParams::default()
        };
        RunConfig {
            world: WorldConfig {
                warmup_periods: 300,
                ..WorldConfig::default()
            },
            policy: PolicyKind::Dkucb,
            periods: 3000,
            seed: 0,
            kernel,
            alpha: AlphaMode::Fixed(2e8),
            r_max: 600.0,
            capacity: Some(200),
            sync: SyncConfig {
                threshold: 1e6,
                r_p: 100.0,
                mode: TriggerMode::Printed,
            },
            sigma_gaus: 150.0,
            hypercube: HypercubeConfig {
                dist_max: 600.0,
                doppler_max: 2500.0,
                n_tx_max: 16.0,
                cells: 8,
                bonus_scale: 2e8,
            },
            wcs_max_iters: 100,
        }
    }
}

impl RunConfig {
    /// Agent settings derived from the run settings.
    pub fn agent(&self) -> AgentConfig {
        let alpha = match self.alpha {
            AlphaMode::Theoretical {
                theta_norm,
                noise_scale,
                delta,
                ..
            } => AlphaMode::Theoretical {
                theta_norm,
                noise_scale,
                delta,
                horizon: self.periods,
            },
            a => a,
        };
        AgentConfig {
            alpha,
            r_max: self.r_max,
            lambda_k: self.kernel.lambda_k,
            jitter: self.kernel.jitter,
            capacity: self.capacity,
        }
    }

    /// Validates every field; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.periods == 0 {
            return Err(Error::config("periods", "must be >= 1"));
        }
        self.world.validate()?;
        self.kernel.validate()?;
        self.agent().validate()?;
        self.sync.validate()?;
        if !(self.sigma_gaus.is_finite() && self.sigma_gaus > 0.0) {
            return Err(Error::config("gaussian.sigma", "must be finite and > 0"));
        }
        self.hypercube.validate()
    }

    /// Instantiates the configured policy.
    pub fn build_policy(&self) -> Result<Box<dyn Policy>> {
        Ok(match self.policy {
            PolicyKind::Dkucb => Box::new(DkUcbPolicy::new(
                "dkucb",
                CompositeKernel::new(self.kernel),
                self.agent(),
                self.sync,
            )?),
            PolicyKind::GausKernel => Box::new(DkUcbPolicy::new(
                "gaus-kernel",
                GaussianKernel {
                    sigma: self.sigma_gaus,
                },
                self.agent(),
                self.sync,
            )?),
            PolicyKind::Hypercube => Box::new(HypercubePolicy::new(self.hypercube)?),
            PolicyKind::Random => Box::new(RandomPolicy::new(stream_rng(self.seed, STREAM_POLICY))),
            PolicyKind::Wcs => Box::new(WcsPolicy {
                max_iters: self.wcs_max_iters,
            }),
        })
    }
}

/// One associated vehicle in one period.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VehicleRow {
    /// Period index.
    pub period: u32,
    /// Vehicle id.
    pub vehicle: u32,
    /// Chosen station.
    pub arm: ArmId,
    /// Realized rate, bits/s.
    pub rate: f64,
    /// Best response station holding the others fixed.
    pub best_arm: ArmId,
    /// Its rate, bits/s.
    pub best_rate: f64,
    /// `best_rate − rate`.
    pub regret: f64,
    /// Synchronized after this period's feedback.
    pub synced: bool,
    /// Samples uploaded.
    pub uploaded: usize,
    /// Samples downloaded.
    pub downloaded: usize,
    /// Pool items eligible for download.
    pub eligible: usize,
    /// Pool items inside the subspace.
    pub in_subspace: usize,
}

/// Headline numbers of a run, all recomputable from the rows.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunSummary {
    /// Policy identifier.
    pub policy: &'static str,
    /// Seed.
    pub seed: u64,
    /// Horizon.
    pub periods: u32,
    /// Number of rows.
    pub vehicle_periods: usize,
    /// Sum of per-row regret.
    pub cumulative_regret: f64,
    /// Mean realized rate per vehicle-period, bits/s.
    pub average_rate: f64,
    /// Rows with a synchronization.
    pub syncs: usize,
    /// `syncs / vehicle_periods`.
    pub sync_rate: f64,
    /// Samples uploaded in total.
    pub uploaded: usize,
    /// Samples downloaded in total.
    pub downloaded: usize,
    /// Mean over synchronizations with a non-empty pool of
    /// `1 − in_subspace / eligible`; absent without such a synchronization.
    pub sharing_efficiency: Option<f64>,
}

/// Rows plus summary.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsLog {
    /// Per-vehicle, per-period rows in period then vehicle order.
    pub rows: Vec<VehicleRow>,
    /// Aggregates.
    pub summary: RunSummary,
}

impl MetricsLog {
    /// Cumulative regret over periods `0..t`.
    pub fn cumulative_regret_at(&self, t: u32) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.period < t)
            .map(|r| r.regret)
            .sum()
    }

    /// Cumulative regret after each period.
    pub fn regret_curve(&self) -> Vec<f64> {
        let mut curve = alloc::vec![0.0; self.summary.periods as usize];
        for r in &self.rows {
            curve[r.period as usize] += r.regret;
        }
        let mut acc = 0.0;
        for c in &mut curve {
            acc += *c;
            *c = acc;
        }
        curve
    }
}

/// Aggregates from rows.
pub fn summarize(policy: &'static str, seed: u64, periods: u32, rows: &[VehicleRow]) -> RunSummary {
    let n = rows.len();
    let cumulative_regret = rows.iter().map(|r| r.regret).sum();
    let total_rate: f64 = rows.iter().map(|r| r.rate).sum();
    let syncs = rows.iter().filter(|r| r.synced).count();
    let (mut eff_sum, mut eff_n) = (0.0, 0usize);
    for r in rows.iter().filter(|r| r.synced && r.eligible > 0) {
        eff_sum += 1.0 - r.in_subspace as f64 / r.eligible as f64;
        eff_n += 1;
    }
    let per_row = |x: f64| if n == 0 { 0.0 } else { x / n as f64 };
    RunSummary {
        policy,
        seed,
        periods,
        vehicle_periods: n,
        cumulative_regret,
        average_rate: per_row(total_rate),
        syncs,
        sync_rate: per_row(syncs as f64),
        uploaded: rows.iter().map(|r| r.uploaded).sum(),
        downloaded: rows.iter().map(|r| r.downloaded).sum(),
        sharing_efficiency: (eff_n > 0).then(|| eff_sum / eff_n as f64),
    }
}

/// Runs the configured policy.
pub fn run(cfg: &RunConfig) -> Result<MetricsLog> {
    cfg.validate()?;
    let mut policy = cfg.build_policy()?;
    run_with(cfg, policy.as_mut())
}

/// Runs `policy` on the world described by `cfg`.
pub fn run_with(cfg: &RunConfig, policy: &mut dyn Policy) -> Result<MetricsLog> {
    cfg.validate()?;
    let world = World::new(
        cfg.world.clone(),
        stream_rng(cfg.seed, STREAM_MOBILITY),
        stream_rng(cfg.seed, STREAM_FADING),
    )?;
    run_in(cfg, world, policy)
}

/// Runs `policy` for `cfg.periods` periods starting from `world`.
pub fn run_in(cfg: &RunConfig, mut world: World, policy: &mut dyn Policy) -> Result<MetricsLog> {
    let mut rows = Vec::new();
    for t in 0..cfg.periods {
        for gone in world.step_mobility() {
            policy.depart(gone);
        }
        world.update_links();
        let candidates = world.candidate_contexts(cfg.r_max);
        let snapshot = world.snapshot(cfg.r_max);
        let ids: Vec<u32> = world.vehicles().iter().map(|v| v.id).collect();
        let obs = Observation {
            period: t,
            vehicles: &ids,
            candidates: &candidates,
            snapshot: &snapshot,
        };
        let assoc = policy.decide(&obs)?;
        if !check_association(&candidates, &assoc) {
            return Err(Error::config(
                "policy",
                "association violates the one-station constraint",
            ));
        }
        let mut rewards = Vec::with_capacity(ids.len());
        let mut best = Vec::with_capacity(ids.len());
        for i in 0..ids.len() {
            match assoc.get(i) {
                Some(j) => {
                    rewards.push(Some(snapshot.rate(i, j, &assoc)));
                    best.push(snapshot.best_arm_rate(i, &assoc));
                }
                None => {
                    rewards.push(None);
                    best.push(None);
                }
            }
        }
        let comm = policy.feedback(&obs, &assoc, &rewards)?;
        world.commit_loads(&assoc);
        for i in 0..ids.len() {
            if let (Some(arm), Some(rate), Some((best_arm, best_rate))) =
                (assoc.get(i), rewards[i], best[i])
            {
                let c = comm[i];
                rows.push(VehicleRow {
                    period: t,
                    vehicle: ids[i],
                    arm,
                    rate,
                    best_arm,
                    best_rate,
                    regret: best_rate - rate,
                    synced: c.synced,
                    uploaded: c.uploaded,
                    downloaded: c.downloaded,
                    eligible: c.eligible,
                    in_subspace: c.in_subspace,
                });
            }
        }
    }
    let summary = summarize(policy.name(), cfg.seed, cfg.periods, &rows);
    Ok(MetricsLog { rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{BaseStation, MapGeometry};
    use crate::geometry::{Point, Polyline};

    fn small(policy: PolicyKind, periods: u32) -> RunConfig {
        RunConfig {
            policy,
            periods,
            seed: 5,
            world: WorldConfig {
                period_s: 1.0,
                ..WorldConfig::default()
            },
            ..RunConfig::default()
        }
    }

    #[test]
    fn policy_names_round_trip() {
        for p in PolicyKind::ALL {
            assert_eq!(PolicyKind::parse(p.as_str()), Some(p));
        }
        assert_eq!(PolicyKind::parse("nope"), None);
    }

    #[test]
    fn validation_names_fields() {
        let mut cfg = small(PolicyKind::Dkucb, 10);
        cfg.periods = 0;
        assert!(matches!(
            run(&cfg),
            Err(Error::InvalidConfig {
                field: "periods",
                ..
            })
        ));
        let mut cfg = small(PolicyKind::Dkucb, 10);
        cfg.sync.r_p = -1.0;
        assert!(matches!(
            run(&cfg),
            Err(Error::InvalidConfig {
                field: "sync.r_p",
                ..
            })
        ));
        let mut cfg = small(PolicyKind::Dkucb, 10);
        cfg.kernel.sigma_l = 0.0;
        assert!(matches!(
            run(&cfg),
            Err(Error::InvalidConfig {
                field: "kernel.sigma_l",
                ..
            })
        ));
    }

    #[test]
    fn single_station_has_no_regret() {
        let p = Point::new;
        let mut cfg = small(PolicyKind::Dkucb, 1);
        cfg.world.map = MapGeometry {
            stations: alloc::vec![BaseStation {
                id: 0,
                pos: p(500.0, 510.0)
            }],
            roads: alloc::vec![Polyline::new(alloc::vec![p(0.0, 500.0), p(1000.0, 500.0)]).unwrap()],
            obstacles: Vec::new(),
        };
        cfg.world.arrival_rate = 0.0;
        let mut world = World::new(cfg.world.clone(), stream_rng(0, 1), stream_rng(0, 2)).unwrap();
        world.spawn(0, 10.0);
        let mut policy = cfg.build_policy().unwrap();
        let log = run_in(&cfg, world, policy.as_mut()).unwrap();
        assert_eq!(log.rows.len(), 1);
        assert_eq!(log.summary.cumulative_regret, 0.0);
    }

    #[test]
    fn regret_identity_and_recomputation() {
        for policy in PolicyKind::ALL {
            let log = run(&small(policy, 60)).unwrap();
            let again = summarize(log.summary.policy, 5, 60, &log.rows);
            assert_eq!(again, log.summary);
            let total: f64 = log.rows.iter().map(|r| r.best_rate - r.rate).sum();
            assert!((total - log.summary.cumulative_regret).abs() <= 1e-9 * total.max(1.0));
            assert!(log
                .rows
                .iter()
                .all(|r| r.regret >= 0.0 && r.rate.is_finite() && r.rate >= 0.0));
            let curve = log.regret_curve();
            assert!(curve.windows(2).all(|w| w[1] >= w[0]));
            let end = *curve.last().unwrap();
            assert!((end - log.cumulative_regret_at(60)).abs() <= 1e-9 * end.max(1.0));
        }
    }

    #[test]
    fn common_random_numbers_across_policies() {
        let a = run(&small(PolicyKind::Dkucb, 40)).unwrap();
        let b = run(&small(PolicyKind::Random, 40)).unwrap();
        let key = |l: &MetricsLog| {
            l.rows
                .iter()
                .map(|r| (r.period, r.vehicle))
                .collect::<Vec<_>>()
        };
        assert_eq!(key(&a), key(&b));
    }

    #[test]
    fn no_sync_without_trigger_or_drift() {
        let mut cfg = small(PolicyKind::Dkucb, 50);
        cfg.sync.threshold = f64::INFINITY;
        cfg.sync.r_p = f64::INFINITY;
        let log = run(&cfg).unwrap();
        assert!(!log.rows.is_empty());
        assert_eq!(log.summary.syncs, 0);
        assert_eq!(log.summary.sharing_efficiency, None);
    }

    #[test]
    fn deterministic() {
        let cfg = small(PolicyKind::Dkucb, 50);
        assert_eq!(run(&cfg).unwrap(), run(&cfg).unwrap());
    }
}
