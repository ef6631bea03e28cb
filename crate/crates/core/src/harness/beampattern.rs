use serde::Serialize;

use crate::harness::config::{ExperimentConfig, SolverKind};
use crate::harness::solve::match_target_wsr;
use crate::harness::sweep::trial_channels;
use crate::model::{self, DeploymentKind};
use crate::{CMat, Result};

/// Half-width of the acceptable WSR window around the target.
pub const TARGET_WSR_TOL: f64 = 0.1;

pub const REFERENCE_LABEL: &str = "radar_reference";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternRow {
    pub label: &'static str,
    pub angle_deg: f64,
    pub gain_db: f64,
}

/// Operating point each curve was drawn at. `rho` is the common ρ of all trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternSummary {
    pub label: &'static str,
    pub target_wsr: f64,
    pub mean_wsr: f64,
    pub rho: f64,
    pub peak_db: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BeampatternResult {
    pub rows: Vec<PatternRow>,
    pub summaries: Vec<PatternSummary>,
}

impl BeampatternResult {
    pub fn curve(&self, label: &str) -> Vec<(f64, f64)> {
        self.rows.iter().filter(|r| r.label == label).map(|r| (r.angle_deg, r.gain_db)).collect()
    }
}

/// Trial-averaged (linear scale) beampatterns of the separated and shared
/// designs at a target WSR, plus the full-array MIMO radar reference.
pub fn run_beampattern_experiment(config: &ExperimentConfig, target_wsr: f64) -> Result<BeampatternResult> {
    config.validate()?;
    let spec = config.deployment(DeploymentKind::Shared)?;
    let geometry = spec.geometry();
    let degrees = config.angle_grid.degrees();
    let radians = config.angle_grid.radians();
    let target_deg = config.target_angle_deg;
    let channels = trial_channels(config)?;
    let mut result = BeampatternResult::default();

    for solver in [SolverKind::Separated, SolverKind::Shared] {
        if !config.runs(solver) {
            continue;
        }
        let matched = match_target_wsr(solver, &channels, config, target_wsr, TARGET_WSR_TOL)?;
        let n = matched.outcomes.len() as f64;
        let mut linear = vec![0.0; radians.len()];
        for o in &matched.outcomes {
            let pattern = model::beampattern(&o.design.transmit_covariance(), &geometry, &radians)?;
            for (acc, (_, db)) in linear.iter_mut().zip(pattern) {
                *acc += 10f64.powf(db / 10.0) / n;
            }
        }
        let label = solver.as_str();
        push_curve(&mut result.rows, label, &degrees, &linear);
        result.summaries.push(PatternSummary {
            label,
            target_wsr,
            mean_wsr: matched.mean_wsr,
            rho: matched.rho,
            peak_db: model::linear_to_db(value_at(&degrees, &linear, target_deg)),
        });
    }

    let reference: CMat = model::aligned_covariance(spec.target_angle, &geometry, spec.power_total);
    let pattern = model::beampattern(&reference, &geometry, &radians)?;
    let linear: Vec<f64> = pattern.iter().map(|(_, db)| 10f64.powf(db / 10.0)).collect();
    push_curve(&mut result.rows, REFERENCE_LABEL, &degrees, &linear);
    result.summaries.push(PatternSummary {
        label: REFERENCE_LABEL,
        target_wsr,
        mean_wsr: 0.0,
        rho: 0.0,
        peak_db: model::linear_to_db(value_at(&degrees, &linear, target_deg)),
    });
    Ok(result)
}

fn push_curve(rows: &mut Vec<PatternRow>, label: &'static str, degrees: &[f64], linear: &[f64]) {
    rows.extend(
        degrees
            .iter()
            .zip(linear)
            .map(|(&angle_deg, &v)| PatternRow { label, angle_deg, gain_db: model::linear_to_db(v) }),
    );
}

/// Grid value nearest to `angle_deg`.
fn value_at(degrees: &[f64], values: &[f64], angle_deg: f64) -> f64 {
    let i = degrees
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - angle_deg).abs().total_cmp(&(b.1 - angle_deg).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    values[i]
}

/// Angles (degrees) where `curve` stays within 3 dB of its value at `center_deg`,
/// walking outwards from the center until the first crossing on each side.
pub fn mainlobe(curve: &[(f64, f64)], center_deg: f64) -> Vec<f64> {
    let Some(c) = curve
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 .0 - center_deg).abs().total_cmp(&(b.1 .0 - center_deg).abs()))
        .map(|(i, _)| i)
    else {
        return Vec::new();
    };
    let floor = curve[c].1 - 3.0;
    let mut lo = c;
    while lo > 0 && curve[lo - 1].1 >= floor {
        lo -= 1;
    }
    let mut hi = c;
    while hi + 1 < curve.len() && curve[hi + 1].1 >= floor {
        hi += 1;
    }
    curve[lo..=hi].iter().map(|p| p.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mainlobe_of_triangle() {
        let curve: Vec<(f64, f64)> = (-5..=5).map(|i| (i as f64, -(i as f64).abs())).collect();
        assert_eq!(mainlobe(&curve, 0.0), vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn value_at_picks_nearest() {
        assert_eq!(value_at(&[-1.0, 0.0, 1.0], &[5.0, 6.0, 7.0], 0.2), 6.0);
    }
}
