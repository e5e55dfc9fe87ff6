//! One-axis parameter sweeps.
//!
//! An axis is any key of the configuration file in dotted form
//! (`sync.d`, `channel.bandwidth_mhz`, `policy`, `seed`, ...). Each value
//! is written into a copy of the base configuration, which is then run
//! once per seed.

use serde::Serialize;
use toml::Value;

use crate::config::FileConfig;
use crate::error::SimError;

/// One line of `sweep.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: String,
    pub policy: String,
    pub seed: u64,
    pub periods: u32,
    pub vehicle_periods: usize,
    pub cumulative_regret: f64,
    pub average_rate: f64,
    pub syncs: usize,
    pub sync_rate: f64,
    pub uploaded: usize,
    pub downloaded: usize,
    pub sharing_efficiency: Option<f64>,
}

pub const SWEEP_FILE: &str = "sweep.csv";

fn parse_like(old: &Value, raw: &str, axis: &str) -> Result<Value, SimError> {
    let bad = |what: &str| SimError::Invalid {
        field: axis.to_owned(),
        reason: format!("`{raw}` is not {what}"),
    };
    Ok(match old {
        Value::String(_) => Value::String(raw.to_owned()),
        Value::Integer(_) => Value::Integer(raw.parse().map_err(|_| bad("an integer"))?),
        Value::Float(_) => Value::Float(raw.parse().map_err(|_| bad("a number"))?),
        Value::Boolean(_) => Value::Boolean(raw.parse().map_err(|_| bad("true or false"))?),
        _ => return Err(bad("settable")),
    })
}

/// Copy of `base` with the dotted key `axis` set to `raw`.
pub fn with_axis(base: &FileConfig, axis: &str, raw: &str) -> Result<FileConfig, SimError> {
    let unknown = || SimError::Invalid {
        field: axis.to_owned(),
        reason: "no such configuration key".into(),
    };
    let mut root = Value::try_from(base).expect("config serializes");
    let mut slot = &mut root;
    for part in axis.split('.') {
        slot = slot.get_mut(part).ok_or_else(unknown)?;
    }
    if slot.is_table() {
        return Err(unknown());
    }
    *slot = parse_like(slot, raw.trim(), axis)?;
    root.try_into().map_err(|e| SimError::Toml(Box::new(e)))
}

/// Runs every value over seeds `base.seed .. base.seed + seeds`.
/// `progress` is called after each run.
pub fn sweep(
    base: &FileConfig,
    axis: &str,
    values: &[String],
    seeds: u64,
    mut progress: impl FnMut(&SweepRow),
) -> Result<Vec<SweepRow>, SimError> {
    // validate every point before spending time on any of them
    let mut points = Vec::with_capacity(values.len());
    for v in values {
        let cfg = with_axis(base, axis, v)?;
        cfg.to_run()?;
        points.push((v, cfg));
    }
    let mut out = Vec::new();
    for (v, cfg) in points {
        for k in 0..seeds {
            let mut run = cfg.to_run()?;
            run.seed = cfg.seed + k;
            let s = dkucb_core::harness::run(&run)?.summary;
            let row = SweepRow {
                axis: axis.to_owned(),
                value: v.clone(),
                policy: s.policy.to_owned(),
                seed: s.seed,
                periods: s.periods,
                vehicle_periods: s.vehicle_periods,
                cumulative_regret: s.cumulative_regret,
                average_rate: s.average_rate,
                syncs: s.syncs,
                sync_rate: s.sync_rate,
                uploaded: s.uploaded,
                downloaded: s.downloaded,
                sharing_efficiency: s.sharing_efficiency,
            };
            progress(&row);
            out.push(row);
        }
    }
    Ok(out)
}

pub fn write_sweep(path: &std::path::Path, rows: &[SweepRow]) -> Result<(), SimError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| SimError::io(path, e))
}
