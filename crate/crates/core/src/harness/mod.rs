//! Seeded Monte Carlo experiments: tradeoff sweeps over ρ, beampatterns at a
//! target WSR, per-antenna power reports, and the CSV/JSON files they emit.
//!
//! Every trial draws its channels from its own ChaCha20 stream keyed by the
//! config seed, so results do not depend on thread scheduling.

mod beampattern;
mod config;
mod output;
mod power;
mod solve;
mod sweep;

pub use beampattern::{
    mainlobe, run_beampattern_experiment, BeampatternResult, PatternRow, PatternSummary, REFERENCE_LABEL,
    TARGET_WSR_TOL,
};
pub use config::{default_alpha_list, default_rho_grid, parse_config, AngleGrid, ExperimentConfig, SolverKind};
pub use output::*;
pub use power::{run_power_experiment, run_power_report, AntennaPower, AntennaRole, OperatingPoint};
pub use solve::{match_target_wsr, solve_trial, Design, MatchedDesign, SolveOutcome, METRIC_CROSS_CHECK_TOL, RHO_MAX};
pub use sweep::{
    run_baselines, run_tradeoff_sweep, trial_channels, BaselineMean, BaselineRow, SweepResult, TradeoffMean,
    TradeoffPoint,
};

use std::path::{Path, PathBuf};

use crate::Result;

/// Writes the four sweep tables and the manifest into `dir`.
pub fn write_sweep(result: &SweepResult, config: &ExperimentConfig, dir: &Path, command: &str) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    if !result.rows.is_empty() || result.baselines.is_empty() {
        paths.push(write_csv(dir, SWEEP_CSV, SWEEP_HEADER, &result.rows)?);
        paths.push(write_csv(dir, SWEEP_MEAN_CSV, SWEEP_MEAN_HEADER, &result.means)?);
    }
    if !result.baselines.is_empty() {
        paths.push(write_csv(dir, BASELINE_CSV, BASELINE_HEADER, &result.baselines)?);
        paths.push(write_csv(dir, BASELINE_MEAN_CSV, BASELINE_MEAN_HEADER, &result.baseline_means)?);
    }
    let mut manifest = Manifest::new(command, config);
    manifest.files = file_names(&paths);
    manifest.failed_rows = result.failed_rows();
    let failures: Vec<serde_json::Value> = result
        .rows
        .iter()
        .filter_map(|r| {
            r.error.as_ref().map(|e| {
                serde_json::json!({ "solver": r.solver, "rho": r.rho, "trial": r.trial, "error": e })
            })
        })
        .collect();
    if !failures.is_empty() {
        manifest.extra = serde_json::json!({ "failures": failures });
    }
    paths.push(manifest.write(dir)?);
    Ok(paths)
}

pub fn write_beampattern(result: &BeampatternResult, config: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = vec![
        write_csv(dir, BEAMPATTERN_CSV, BEAMPATTERN_HEADER, &result.rows)?,
        write_csv(dir, BEAMPATTERN_SUMMARY_CSV, BEAMPATTERN_SUMMARY_HEADER, &result.summaries)?,
    ];
    let mut manifest = Manifest::new("beampattern", config);
    manifest.files = file_names(&paths);
    paths.push(manifest.write(dir)?);
    Ok(paths)
}

pub fn write_power_report(rows: &[AntennaPower], config: &ExperimentConfig, dir: &Path, point: OperatingPoint) -> Result<Vec<PathBuf>> {
    let mut paths = vec![write_csv(dir, POWER_CSV, POWER_HEADER, rows)?];
    let mut manifest = Manifest::new("power-report", config);
    manifest.files = file_names(&paths);
    manifest.extra = match point {
        OperatingPoint::Rho(rho) => serde_json::json!({ "rho": rho }),
        OperatingPoint::TargetWsr(t) => serde_json::json!({ "target_wsr": t }),
    };
    paths.push(manifest.write(dir)?);
    Ok(paths)
}

fn file_names(paths: &[PathBuf]) -> Vec<String> {
    paths
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect()
}
