//! TOML run configuration in engineering units (dB, dBm, GHz, degrees),
//! mapped onto [`RunConfig`].
//!
//! Every key is optional; missing keys take the defaults shown by
//! `dkucb defaults`. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use dkucb_core::agent::AlphaMode;
use dkucb_core::baselines::HypercubeConfig;
use dkucb_core::env::{ChannelConfig, MapGeometry, WorldConfig, SPEED_OF_LIGHT};
use dkucb_core::harness::{PolicyKind, RunConfig};
use dkucb_core::kernel::KernelParams;
use dkucb_core::sync::{SyncConfig, TriggerMode};
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::geometry;

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Top level of the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    /// `dkucb`, `gaus-kernel`, `hypercube`, `random` or `wcs`.
    pub policy: String,
    /// Horizon in periods.
    pub periods: u32,
    /// Master seed.
    pub seed: u64,
    /// Optional geometry file, relative to the configuration file.
    pub geometry: Option<PathBuf>,
    pub world: WorldSection,
    pub channel: ChannelSection,
    pub kernel: KernelSection,
    pub agent: AgentSection,
    pub sync: SyncSection,
    pub gaussian: GaussianSection,
    pub hypercube: HypercubeSection,
    pub wcs: WcsSection,
}

/// `[world]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldSection {
    pub period_s: f64,
    /// Mean arrivals per period.
    pub arrival_rate: f64,
    pub speed_min_kmh: f64,
    pub speed_max_kmh: f64,
    /// Mobility-only periods before period 0.
    pub warmup_periods: u32,
}

/// `[channel]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub carrier_ghz: f64,
    pub bandwidth_mhz: f64,
    pub tx_power_dbm: f64,
    pub noise_dbm_per_hz: f64,
    pub ref_distance_m: f64,
    pub exponent_los: f64,
    pub exponent_nlos: f64,
    /// Extra loss of a blocked link, dB (positive).
    pub nlos_penalty_db: f64,
    pub rician_k_db: f64,
    pub mainlobe_gain_db: f64,
    /// Sidelobe level relative to the mainlobe, dB (negative).
    pub sidelobe_db: f64,
    pub rx_half_beamwidth_deg: f64,
    pub doppler_corr: f64,
}

/// `[kernel]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSection {
    pub sigma_l: f64,
    pub sigma_f: f64,
    pub sigma_n: f64,
    pub lambda_k: f64,
    pub jitter: f64,
}

/// `[agent]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentSection {
    /// `fixed` or `theoretical`.
    pub alpha_mode: String,
    /// Exploration weight in bits/s (fixed mode).
    pub alpha: f64,
    /// Theoretical mode only.
    pub theta_norm: f64,
    /// Theoretical mode only.
    pub noise_scale: f64,
    /// Theoretical mode only.
    pub delta: f64,
    pub r_max: f64,
    /// Per-arm sample cap; 0 disables it.
    pub capacity: usize,
}

/// `[sync]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyncSection {
    /// Trigger threshold; `inf` disables the trigger.
    pub d: f64,
    /// Subspace radius, meters; `inf` disables drift checks and filtering.
    pub r_p: f64,
    /// `printed` or `gain-since-sync`.
    pub trigger: String,
}

/// `[gaussian]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianSection {
    pub sigma: f64,
}

/// `[hypercube]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HypercubeSection {
    pub cells: u16,
    pub dist_max: f64,
    pub doppler_max: f64,
    pub n_tx_max: f64,
    pub bonus_scale: f64,
}

/// `[wcs]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WcsSection {
    pub max_iters: usize,
}

impl Default for FileConfig {
    fn default() -> Self {
        FileConfig::from_run(&RunConfig::default())
    }
}

macro_rules! section_default {
    ($($t:ident => $f:ident),*) => {
        $(impl Default for $t {
            fn default() -> Self {
                FileConfig::default().$f
            }
        })*
    };
}

section_default!(
    WorldSection => world,
    ChannelSection => channel,
    KernelSection => kernel,
    AgentSection => agent,
    SyncSection => sync,
    GaussianSection => gaussian,
    HypercubeSection => hypercube,
    WcsSection => wcs
);

impl FileConfig {
    /// File view of a run configuration (the map is not represented).
    pub fn from_run(r: &RunConfig) -> Self {
        let ch = &r.world.channel;
        let (alpha_mode, alpha, theta_norm, noise_scale, delta) = match r.alpha {
            AlphaMode::Fixed(a) => ("fixed", a, 1.0, 1.0, 0.05),
            AlphaMode::Theoretical {
                theta_norm,
                noise_scale,
                delta,
                ..
            } => ("theoretical", 0.0, theta_norm, noise_scale, delta),
        };
        FileConfig {
            policy: r.policy.as_str().to_owned(),
            periods: r.periods,
            seed: r.seed,
            geometry: None,
            world: WorldSection {
                period_s: r.world.period_s,
                arrival_rate: r.world.arrival_rate,
                speed_min_kmh: r.world.speed_min_kmh,
                speed_max_kmh: r.world.speed_max_kmh,
                warmup_periods: r.world.warmup_periods,
            },
            channel: ChannelSection {
                carrier_ghz: SPEED_OF_LIGHT / ch.wavelength / 1e9,
                bandwidth_mhz: ch.bandwidth / 1e6,
                tx_power_dbm: to_db(ch.tx_power * 1e3),
                noise_dbm_per_hz: to_db(ch.noise_density * 1e3),
                ref_distance_m: ch.ref_distance,
                exponent_los: ch.exponent_los,
                exponent_nlos: ch.exponent_nlos,
                nlos_penalty_db: -to_db(ch.nlos_penalty),
                rician_k_db: to_db(ch.rician_k),
                mainlobe_gain_db: to_db(ch.mainlobe_gain),
                sidelobe_db: to_db(ch.sidelobe),
                rx_half_beamwidth_deg: ch.rx_half_beamwidth.to_degrees(),
                doppler_corr: ch.doppler_corr,
            },
            kernel: KernelSection {
                sigma_l: r.kernel.sigma_l,
                sigma_f: r.kernel.sigma_f,
                sigma_n: r.kernel.sigma_n,
                lambda_k: r.kernel.lambda_k,
                jitter: r.kernel.jitter,
            },
            agent: AgentSection {
                alpha_mode: alpha_mode.to_owned(),
                alpha,
                theta_norm,
                noise_scale,
                delta,
                r_max: r.r_max,
                capacity: r.capacity.unwrap_or(0),
            },
            sync: SyncSection {
                d: r.sync.threshold,
                r_p: r.sync.r_p,
                trigger: match r.sync.mode {
                    TriggerMode::Printed => "printed",
                    TriggerMode::GainSinceSync => "gain-since-sync",
                }
                .to_owned(),
            },
            gaussian: GaussianSection {
                sigma: r.sigma_gaus,
            },
            hypercube: HypercubeSection {
                cells: r.hypercube.cells,
                dist_max: r.hypercube.dist_max,
                doppler_max: r.hypercube.doppler_max,
                n_tx_max: r.hypercube.n_tx_max,
                bonus_scale: r.hypercube.bonus_scale,
            },
            wcs: WcsSection {
                max_iters: r.wcs_max_iters,
            },
        }
    }

    /// Parses TOML text.
    pub fn parse(text: &str) -> Result<Self, SimError> {
        toml::from_str(text).map_err(|e| SimError::Toml(Box::new(e)))
    }

    /// Reads and parses a file. A relative `geometry` path is resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        if let Some(g) = &cfg.geometry {
            if g.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.geometry = Some(base.join(g));
            }
        }
        Ok(cfg)
    }

    /// TOML text of this configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Builds and validates the run configuration, loading the geometry file
    /// if one is named.
    pub fn to_run(&self) -> Result<RunConfig, SimError> {
        let map = match &self.geometry {
            Some(p) => geometry::load(p)?,
            None => MapGeometry::default_grid(),
        };
        self.to_run_with_map(map)
    }

    /// Like [`FileConfig::to_run`] with an explicit map.
    pub fn to_run_with_map(&self, map: MapGeometry) -> Result<RunConfig, SimError> {
        let policy = PolicyKind::parse(&self.policy).ok_or_else(|| SimError::Invalid {
            field: "policy".into(),
            reason: format!(
                "unknown policy {:?}; expected one of {}",
                self.policy,
                PolicyKind::ALL.map(|p| p.as_str()).join(", ")
            ),
        })?;
        let ch = &self.channel;
        if !(ch.carrier_ghz.is_finite() && ch.carrier_ghz > 0.0) {
            return Err(SimError::Invalid {
                field: "channel.carrier_ghz".into(),
                reason: "must be finite and > 0".into(),
            });
        }
        let alpha = match self.agent.alpha_mode.as_str() {
            "fixed" => AlphaMode::Fixed(self.agent.alpha),
            "theoretical" => AlphaMode::Theoretical {
                theta_norm: self.agent.theta_norm,
                noise_scale: self.agent.noise_scale,
                delta: self.agent.delta,
                horizon: self.periods,
            },
            other => {
                return Err(SimError::Invalid {
                    field: "agent.alpha_mode".into(),
                    reason: format!("unknown mode {other:?}; expected fixed or theoretical"),
                })
            }
        };
        let mode = match self.sync.trigger.as_str() {
            "printed" => TriggerMode::Printed,
            "gain-since-sync" => TriggerMode::GainSinceSync,
            other => {
                return Err(SimError::Invalid {
                    field: "sync.trigger".into(),
                    reason: format!(
                        "unknown trigger {other:?}; expected printed or gain-since-sync"
                    ),
                })
            }
        };
        let run = RunConfig {
            world: WorldConfig {
                period_s: self.world.period_s,
                arrival_rate: self.world.arrival_rate,
                speed_min_kmh: self.world.speed_min_kmh,
                speed_max_kmh: self.world.speed_max_kmh,
                channel: ChannelConfig {
                    wavelength: SPEED_OF_LIGHT / (ch.carrier_ghz * 1e9),
                    bandwidth: ch.bandwidth_mhz * 1e6,
                    tx_power: db(ch.tx_power_dbm) * 1e-3,
                    noise_density: db(ch.noise_dbm_per_hz) * 1e-3,
                    ref_distance: ch.ref_distance_m,
                    exponent_los: ch.exponent_los,
                    exponent_nlos: ch.exponent_nlos,
                    nlos_penalty: db(-ch.nlos_penalty_db),
                    rician_k: db(ch.rician_k_db),
                    mainlobe_gain: db(ch.mainlobe_gain_db),
                    sidelobe: db(ch.sidelobe_db),
                    rx_half_beamwidth: ch.rx_half_beamwidth_deg.to_radians(),
                    doppler_corr: ch.doppler_corr,
                },
                map,
                warmup_periods: self.world.warmup_periods,
            },
            policy,
            periods: self.periods,
            seed: self.seed,
            kernel: KernelParams {
                sigma_l: self.kernel.sigma_l,
                sigma_f: self.kernel.sigma_f,
                sigma_n: self.kernel.sigma_n,
                lambda_k: self.kernel.lambda_k,
                jitter: self.kernel.jitter,
            },
            alpha,
            r_max: self.agent.r_max,
            capacity: (self.agent.capacity > 0).then_some(self.agent.capacity),
            sync: SyncConfig {
                threshold: self.sync.d,
                r_p: self.sync.r_p,
                mode,
            },
            sigma_gaus: self.gaussian.sigma,
            hypercube: HypercubeConfig {
                dist_max: self.hypercube.dist_max,
                doppler_max: self.hypercube.doppler_max,
                n_tx_max: self.hypercube.n_tx_max,
                cells: self.hypercube.cells,
                bonus_scale: self.hypercube.bonus_scale,
            },
            wcs_max_iters: self.wcs.max_iters,
        };
        run.validate()?;
        Ok(run)
    }
}
