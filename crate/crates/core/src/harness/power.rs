use rayon::prelude::*;
use serde::Serialize;

use crate::harness::config::{ExperimentConfig, SolverKind};
use crate::harness::solve::{match_target_wsr, solve_trial, Design, SolveOutcome};
use crate::harness::beampattern::TARGET_WSR_TOL;
use crate::harness::sweep::trial_channels;
use crate::model::DeploymentSpec;
use crate::{RadcomError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AntennaRole {
    Radar,
    Comm,
    Shared,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AntennaPower {
    pub solver: SolverKind,
    pub antenna: usize,
    pub role: AntennaRole,
    pub power: f64,
}

/// Per-antenna transmit power of one design: radar rows then communication
/// rows for the separated array, every row of `P̌P̌ᴴ` for the shared one.
pub fn run_power_report(design: &Design, spec: &DeploymentSpec) -> Result<Vec<(AntennaRole, f64)>> {
    match design {
        Design::Separated { precoder, covariance } => {
            if covariance.dim() != spec.n_radar || precoder.n_antennas() != spec.n_comm {
                return Err(RadcomError::DimensionMismatch {
                    context: "power report",
                    expected: spec.n_total,
                    got: covariance.dim() + precoder.n_antennas(),
                });
            }
            let radar = covariance.diagonal().into_iter().map(|p| (AntennaRole::Radar, p));
            let comm = precoder.row_powers().into_iter().map(|p| (AntennaRole::Comm, p));
            Ok(radar.chain(comm).collect())
        }
        Design::Shared { precoder } => {
            if precoder.n_antennas() != spec.n_total {
                return Err(RadcomError::DimensionMismatch {
                    context: "power report",
                    expected: spec.n_total,
                    got: precoder.n_antennas(),
                });
            }
            Ok(precoder.row_powers().into_iter().map(|p| (AntennaRole::Shared, p)).collect())
        }
    }
}

/// How each trial picks its operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatingPoint {
    Rho(f64),
    TargetWsr(f64),
}

/// Per-antenna power averaged over trials for every requested solver.
pub fn run_power_experiment(config: &ExperimentConfig, point: OperatingPoint) -> Result<Vec<AntennaPower>> {
    config.validate()?;
    let channels = trial_channels(config)?;
    let mut out = Vec::new();
    for solver in [SolverKind::Separated, SolverKind::Shared] {
        if !config.runs(solver) {
            continue;
        }
        let spec = config.deployment(match solver {
            SolverKind::Separated => crate::DeploymentKind::Separated,
            _ => crate::DeploymentKind::Shared,
        })?;
        let matched = match point {
            OperatingPoint::Rho(rho) => {
                let outcomes: Vec<Result<SolveOutcome>> =
                    channels.par_iter().map(|ch| solve_trial(solver, ch, config, rho)).collect();
                outcomes.into_iter().collect::<Result<Vec<_>>>()?
            }
            OperatingPoint::TargetWsr(t) => match_target_wsr(solver, &channels, config, t, TARGET_WSR_TOL)?.outcomes,
        };
        let reports = matched.iter().map(|o| run_power_report(&o.design, &spec)).collect::<Result<Vec<_>>>()?;
        let n = reports.len() as f64;
        for antenna in 0..spec.n_total {
            out.push(AntennaPower {
                solver,
                antenna,
                role: reports[0][antenna].0,
                power: reports.iter().map(|r| r[antenna].1).sum::<f64>() / n,
            });
        }
    }
    Ok(out)
}
