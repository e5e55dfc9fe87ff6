//! Result files: `rows.csv` (one line per associated vehicle per period)
//! and `summary.json`.

use std::fs;
use std::path::Path;

use dkucb_core::harness::{MetricsLog, RunSummary, VehicleRow};
use serde::Serialize;

use crate::config::FileConfig;
use crate::error::SimError;

pub const ROWS_FILE: &str = "rows.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Serialize)]
struct SummaryFile<'a> {
    #[serde(flatten)]
    summary: &'a RunSummary,
    config: &'a FileConfig,
}

pub fn write_rows(path: &Path, rows: &[VehicleRow]) -> Result<(), SimError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| SimError::io(path, e))
}

pub fn read_rows(path: &Path) -> Result<Vec<VehicleRow>, SimError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

pub fn summary_json(summary: &RunSummary, config: &FileConfig) -> Result<String, SimError> {
    Ok(serde_json::to_string_pretty(&SummaryFile {
        summary,
        config,
    })?)
}

/// Writes both files into `dir`, creating it if needed.
pub fn write_run(dir: &Path, log: &MetricsLog, config: &FileConfig) -> Result<(), SimError> {
    fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    write_rows(&dir.join(ROWS_FILE), &log.rows)?;
    let path = dir.join(SUMMARY_FILE);
    let mut text = summary_json(&log.summary, config)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| SimError::io(&path, e))
}
