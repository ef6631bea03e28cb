use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{self, BaselinePoint, MulpOptions};
use crate::harness::config::{ExperimentConfig, SolverKind};
use crate::harness::solve::solve_trial;
use crate::model::{self, ChannelRealization, DeploymentKind};
use crate::Result;

/// One `(solver, ρ, trial)` row of a tradeoff sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffPoint {
    pub solver: SolverKind,
    pub rho: f64,
    pub trial: u64,
    #[serde(rename = "wsr_bps_hz")]
    pub wsr: f64,
    pub probing_dbm: f64,
    pub iterations: usize,
    pub wall_ms: f64,
    pub converged: bool,
    #[serde(skip)]
    pub error: Option<String>,
}

impl TradeoffPoint {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Trial mean of the successful rows at one `(solver, ρ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffMean {
    pub solver: SolverKind,
    pub rho: f64,
    #[serde(rename = "wsr_bps_hz")]
    pub wsr: f64,
    pub probing_dbm: f64,
    pub n_ok: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineRow {
    pub baseline: &'static str,
    pub alpha: Option<f64>,
    pub trial: u64,
    #[serde(rename = "wsr_bps_hz")]
    pub wsr: f64,
    pub probing_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineMean {
    pub baseline: &'static str,
    pub alpha: Option<f64>,
    #[serde(rename = "wsr_bps_hz")]
    pub wsr: f64,
    pub probing_dbm: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SweepResult {
    pub rows: Vec<TradeoffPoint>,
    pub means: Vec<TradeoffMean>,
    pub baselines: Vec<BaselineRow>,
    pub baseline_means: Vec<BaselineMean>,
}

impl SweepResult {
    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.failed()).count()
    }
}

/// Channel draws shared by every solver and ρ, one independent stream per trial.
pub fn trial_channels(config: &ExperimentConfig) -> Result<Vec<ChannelRealization>> {
    let spec = config.deployment(DeploymentKind::Separated)?;
    Ok((0..config.n_trials as u64)
        .map(|t| model::sample_channels_for_trial(&spec, config.seed, t))
        .collect())
}

fn tradeoff_row(solver: SolverKind, rho: f64, trial: u64, ch: &ChannelRealization, config: &ExperimentConfig) -> TradeoffPoint {
    match solve_trial(solver, ch, config, rho) {
        Ok(out) => TradeoffPoint {
            solver,
            rho,
            trial,
            wsr: out.wsr,
            probing_dbm: model::linear_to_db(out.probing),
            iterations: out.iterations,
            wall_ms: out.wall_ms,
            converged: out.converged,
            error: None,
        },
        Err(e) => TradeoffPoint {
            solver,
            rho,
            trial,
            wsr: f64::NAN,
            probing_dbm: f64::NAN,
            iterations: 0,
            wall_ms: 0.0,
            converged: false,
            error: Some(e.to_string()),
        },
    }
}

fn mean_rows(rows: &[TradeoffPoint], config: &ExperimentConfig) -> Vec<TradeoffMean> {
    let mut means = Vec::new();
    for solver in [SolverKind::Separated, SolverKind::Shared] {
        for &rho in &config.rho_grid {
            let ok: Vec<&TradeoffPoint> =
                rows.iter().filter(|r| r.solver == solver && r.rho == rho && !r.failed()).collect();
            if ok.is_empty() && !rows.iter().any(|r| r.solver == solver) {
                continue;
            }
            let n = ok.len() as f64;
            means.push(TradeoffMean {
                solver,
                rho,
                wsr: ok.iter().map(|r| r.wsr).sum::<f64>() / n,
                probing_dbm: ok.iter().map(|r| r.probing_dbm).sum::<f64>() / n,
                n_ok: ok.len(),
            });
        }
    }
    means
}

fn baseline_row(p: &BaselinePoint, trial: u64) -> BaselineRow {
    BaselineRow {
        baseline: p.label.as_str(),
        alpha: p.alpha,
        trial,
        wsr: p.wsr,
        probing_dbm: model::linear_to_db(p.probing),
    }
}

/// Frequency-division, time-division (one point per α), pure-radar and
/// pure-communication reference points for every trial.
pub fn run_baselines(config: &ExperimentConfig, channels: &[ChannelRealization]) -> Result<Vec<BaselineRow>> {
    let spec = config.deployment(DeploymentKind::Shared)?;
    let opts = MulpOptions::default();
    let per_trial: Vec<Result<Vec<BaselineRow>>> = channels
        .par_iter()
        .enumerate()
        .map(|(t, ch)| {
            let t = t as u64;
            let mut rows = vec![baseline_row(&baselines::frequency_division_point(ch, &spec, &opts)?, t)];
            let comm = baselines::pure_comm_point(ch, &spec, &opts)?;
            for &alpha in &config.alpha_list {
                rows.push(baseline_row(&baselines::time_division_from_wsr(comm.wsr, &spec, alpha)?, t));
            }
            rows.push(baseline_row(&baselines::pure_radar_point(&spec), t));
            rows.push(baseline_row(&comm, t));
            Ok(rows)
        })
        .collect();
    let mut out = Vec::new();
    for rows in per_trial {
        out.extend(rows?);
    }
    Ok(out)
}

fn baseline_means(rows: &[BaselineRow]) -> Vec<BaselineMean> {
    let mut keys: Vec<(&'static str, Option<f64>)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|k| k.0 == r.baseline && k.1 == r.alpha) {
            keys.push((r.baseline, r.alpha));
        }
    }
    keys.into_iter()
        .map(|(baseline, alpha)| {
            let sel: Vec<&BaselineRow> = rows.iter().filter(|r| r.baseline == baseline && r.alpha == alpha).collect();
            let n = sel.len() as f64;
            BaselineMean {
                baseline,
                alpha,
                wsr: sel.iter().map(|r| r.wsr).sum::<f64>() / n,
                probing_dbm: sel.iter().map(|r| r.probing_dbm).sum::<f64>() / n,
            }
        })
        .collect()
}

/// Runs every requested solver over the ρ grid and trials. Rows come back in
/// `(solver, ρ, trial)` order no matter how the work was scheduled; a failing
/// solve is recorded as a NaN row and the sweep carries on.
pub fn run_tradeoff_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let channels = trial_channels(config)?;
    let mut jobs = Vec::new();
    for solver in [SolverKind::Separated, SolverKind::Shared] {
        if !config.runs(solver) {
            continue;
        }
        for &rho in &config.rho_grid {
            for trial in 0..config.n_trials as u64 {
                jobs.push((solver, rho, trial));
            }
        }
    }
    let rows: Vec<TradeoffPoint> = jobs
        .par_iter()
        .map(|&(solver, rho, trial)| tradeoff_row(solver, rho, trial, &channels[trial as usize], config))
        .collect();
    let means = mean_rows(&rows, config);
    let baselines = if config.runs(SolverKind::Baselines) { run_baselines(config, &channels)? } else { Vec::new() };
    let baseline_means = baseline_means(&baselines);
    Ok(SweepResult { rows, means, baselines, baseline_means })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            n_total: 4,
            n_users: 2,
            power_total: 10.0,
            rho_grid: vec![0.0, 5.0],
            n_trials: 2,
            alpha_list: vec![0.5],
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn rows_in_solver_rho_trial_order() {
        let res = run_tradeoff_sweep(&small()).unwrap();
        let keys: Vec<(SolverKind, f64, u64)> = res.rows.iter().map(|r| (r.solver, r.rho, r.trial)).collect();
        assert_eq!(
            keys,
            vec![
                (SolverKind::Separated, 0.0, 0),
                (SolverKind::Separated, 0.0, 1),
                (SolverKind::Separated, 5.0, 0),
                (SolverKind::Separated, 5.0, 1),
                (SolverKind::Shared, 0.0, 0),
                (SolverKind::Shared, 0.0, 1),
                (SolverKind::Shared, 5.0, 0),
                (SolverKind::Shared, 5.0, 1),
            ]
        );
        assert_eq!(res.means.len(), 4);
        assert_eq!(res.failed_rows(), 0);
    }

    #[test]
    fn baseline_rows_per_trial() {
        let res = run_tradeoff_sweep(&small()).unwrap();
        // freq division, one time-division point, pure radar, pure comm
        assert_eq!(res.baselines.len(), 2 * 4);
        assert_eq!(res.baseline_means.len(), 4);
        let radar = res.baseline_means.iter().find(|m| m.baseline == "pure_radar").unwrap();
        assert!((radar.probing_dbm - model::linear_to_db(10.0 * 4.0)).abs() < 1e-12);
        assert_eq!(radar.wsr, 0.0);
    }
}
