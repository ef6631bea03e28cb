use std::time::Instant;

use rayon::prelude::*;

use crate::harness::config::{ExperimentConfig, SolverKind};
use crate::model::{self, ChannelRealization, DeploymentKind, PrecoderMatrix, RadarCovariance};
use crate::sep_solver::{self, SepSolverConfig};
use crate::shared_solver;
use crate::{CMat, RadcomError, Result};

/// Agreement required between solver-reported and recomputed metrics.
pub const METRIC_CROSS_CHECK_TOL: f64 = 1e-8;

/// Solver output needed to evaluate metrics and patterns.
#[derive(Debug, Clone)]
pub enum Design {
    Separated { precoder: PrecoderMatrix, covariance: RadarCovariance },
    Shared { precoder: PrecoderMatrix },
}

impl Design {
    /// Overall transmit covariance over the whole array.
    pub fn transmit_covariance(&self) -> CMat {
        match self {
            Design::Separated { precoder, covariance } => model::transmit_covariance_separated(precoder, covariance),
            Design::Shared { precoder } => precoder.gram(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub design: Design,
    pub wsr: f64,
    /// Linear probing power at the target.
    pub probing: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_ms: f64,
}

fn cross_check(solver: SolverKind, reported: f64, recomputed: f64) -> Result<()> {
    if (reported - recomputed).abs() <= METRIC_CROSS_CHECK_TOL * recomputed.abs().max(1.0) {
        Ok(())
    } else {
        Err(RadcomError::MetricMismatch { solver: solver.as_str().into(), metric: "wsr", reported, recomputed })
    }
}

/// Runs one solver on one channel draw and evaluates its metrics with [`model`].
pub fn solve_trial(solver: SolverKind, ch: &ChannelRealization, config: &ExperimentConfig, rho: f64) -> Result<SolveOutcome> {
    let start = Instant::now();
    let outcome = match solver {
        SolverKind::Separated => {
            let spec = config.deployment(DeploymentKind::Separated)?;
            let cfg = SepSolverConfig { rho, ..config.separated.clone() };
            let sol = sep_solver::run_wmmse_sdp(ch, &spec, &cfg)?;
            let wsr = model::wsr_separated(&sol.precoder, &sol.covariance, ch, &spec.rate_weights)?;
            cross_check(solver, sol.wsr(), wsr)?;
            let probing = model::probing_power_separated(&sol.precoder, &sol.covariance, &spec)?;
            SolveOutcome {
                design: Design::Separated { precoder: sol.precoder, covariance: sol.covariance },
                wsr,
                probing,
                iterations: sol.iterations,
                converged: sol.converged,
                wall_ms: 0.0,
            }
        }
        SolverKind::Shared => {
            let spec = config.deployment(DeploymentKind::Shared)?;
            let sol = shared_solver::run_wmmse_mm(ch, &spec, &config.shared, rho)?;
            let wsr = model::wsr_shared(&sol.precoder, ch, &spec.rate_weights)?;
            cross_check(solver, sol.wsr(), wsr)?;
            let probing = model::probing_power_shared(&sol.precoder, &spec)?;
            SolveOutcome {
                design: Design::Shared { precoder: sol.precoder },
                wsr,
                probing,
                iterations: sol.iterations,
                converged: sol.converged,
                wall_ms: 0.0,
            }
        }
        SolverKind::Baselines => {
            return Err(RadcomError::InvalidSpec("baselines are not a tradeoff solver".into()));
        }
    };
    let wall_ms = if config.record_timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    Ok(SolveOutcome { wall_ms, ..outcome })
}

/// Largest ρ tried when matching a target WSR.
pub const RHO_MAX: f64 = 1e4;
const LOG_RHO_MIN: f64 = -4.0;
const TARGET_BISECTION_STEPS: usize = 40;

/// Designs at one common ρ, chosen so that their mean WSR meets a target.
#[derive(Debug, Clone)]
pub struct MatchedDesign {
    pub rho: f64,
    pub mean_wsr: f64,
    pub outcomes: Vec<SolveOutcome>,
}

fn rho_at(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        10f64.powf(LOG_RHO_MIN + t * (RHO_MAX.log10() - LOG_RHO_MIN))
    }
}

fn solve_all(solver: SolverKind, channels: &[ChannelRealization], config: &ExperimentConfig, rho: f64) -> Result<MatchedDesign> {
    let outcomes: Vec<Result<SolveOutcome>> = channels.par_iter().map(|ch| solve_trial(solver, ch, config, rho)).collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let mean_wsr = outcomes.iter().map(|o| o.wsr).sum::<f64>() / outcomes.len() as f64;
    Ok(MatchedDesign { rho, mean_wsr, outcomes })
}

/// Bisects a single ρ on a log scale until the trial-mean WSR is within `tol`
/// of `target`. Returns the closest ρ found when the tolerance is never met.
pub fn match_target_wsr(
    solver: SolverKind,
    channels: &[ChannelRealization],
    config: &ExperimentConfig,
    target: f64,
    tol: f64,
) -> Result<MatchedDesign> {
    let low = solve_all(solver, channels, config, 0.0)?;
    let high = solve_all(solver, channels, config, RHO_MAX)?;
    if target < low.mean_wsr - tol || target > high.mean_wsr + tol {
        return Err(RadcomError::TargetUnreachable {
            solver: solver.as_str().into(),
            target,
            min: low.mean_wsr,
            max: high.mean_wsr,
        });
    }
    let gap = |m: &MatchedDesign| (m.mean_wsr - target).abs();
    let mut best = if gap(&high) < gap(&low) { high } else { low };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..TARGET_BISECTION_STEPS {
        if gap(&best) <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let trial = solve_all(solver, channels, config, rho_at(mid))?;
        if trial.mean_wsr < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if gap(&trial) < gap(&best) {
            best = trial;
        }
    }
    Ok(best)
}
