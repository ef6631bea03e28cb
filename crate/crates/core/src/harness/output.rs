use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::harness::config::ExperimentConfig;
use crate::Result;

pub const SWEEP_CSV: &str = "tradeoff.csv";
pub const SWEEP_MEAN_CSV: &str = "tradeoff_mean.csv";
pub const BASELINE_CSV: &str = "baselines.csv";
pub const BASELINE_MEAN_CSV: &str = "baselines_mean.csv";
pub const BEAMPATTERN_CSV: &str = "beampattern.csv";
pub const BEAMPATTERN_SUMMARY_CSV: &str = "beampattern_summary.csv";
pub const POWER_CSV: &str = "power_report.csv";
pub const MANIFEST_JSON: &str = "manifest.json";

/// Writes `rows` with a header row taken from the field names. An empty table
/// still gets its header so downstream readers can check the schema.
pub fn write_csv<T: Serialize>(dir: &Path, name: &str, header: &[&str], rows: &[T]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(&path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(path)
}

pub const SWEEP_HEADER: &[&str] =
    &["solver", "rho", "trial", "wsr_bps_hz", "probing_dbm", "iterations", "wall_ms", "converged"];
pub const SWEEP_MEAN_HEADER: &[&str] = &["solver", "rho", "wsr_bps_hz", "probing_dbm", "n_ok"];
pub const BASELINE_HEADER: &[&str] = &["baseline", "alpha", "trial", "wsr_bps_hz", "probing_dbm"];
pub const BASELINE_MEAN_HEADER: &[&str] = &["baseline", "alpha", "wsr_bps_hz", "probing_dbm"];
pub const BEAMPATTERN_HEADER: &[&str] = &["label", "angle_deg", "gain_db"];
pub const BEAMPATTERN_SUMMARY_HEADER: &[&str] =
    &["label", "target_wsr", "mean_wsr", "rho", "peak_db"];
pub const POWER_HEADER: &[&str] = &["solver", "antenna", "role", "power"];

/// Run record written next to the tables. Holds no timestamps so identical
/// runs produce identical files.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seed: u64,
    pub n_trials: usize,
    pub channel_streams: &'static str,
    pub files: Vec<String>,
    pub failed_rows: usize,
    pub config: &'a ExperimentConfig,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub extra: serde_json::Value,
}

impl<'a> Manifest<'a> {
    pub fn new(command: &'a str, config: &'a ExperimentConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed: config.seed,
            n_trials: config.n_trials,
            channel_streams: "ChaCha20 keyed by seed, stream index = trial",
            files: Vec::new(),
            failed_rows: 0,
            config,
            extra: serde_json::Value::Null,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(MANIFEST_JSON);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}
