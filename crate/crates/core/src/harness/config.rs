use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::model::{DeploymentKind, DeploymentSpec};
use crate::sep_solver::SepSolverConfig;
use crate::shared_solver::MmConfig;
use crate::{RadcomError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Separated,
    Shared,
    Baselines,
}

impl SolverKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverKind::Separated => "separated",
            SolverKind::Shared => "shared",
            SolverKind::Baselines => "baselines",
        }
    }
}

/// Evenly stepped angle grid in degrees, both ends included when the step divides the span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AngleGrid {
    pub start_deg: f64,
    pub stop_deg: f64,
    pub step_deg: f64,
}

impl Default for AngleGrid {
    fn default() -> Self {
        Self { start_deg: -90.0, stop_deg: 90.0, step_deg: 0.5 }
    }
}

impl AngleGrid {
    pub fn degrees(&self) -> Vec<f64> {
        let n = ((self.stop_deg - self.start_deg) / self.step_deg + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.start_deg + i as f64 * self.step_deg).collect()
    }

    pub fn radians(&self) -> Vec<f64> {
        self.degrees().into_iter().map(f64::to_radians).collect()
    }
}

/// 24 log-spaced points over `[1e-2, 1e3]` with `0` prepended.
pub fn default_rho_grid() -> Vec<f64> {
    let n = 24;
    let mut grid = vec![0.0];
    grid.extend((0..n).map(|i| 10f64.powf(-2.0 + 5.0 * i as f64 / (n - 1) as f64)));
    grid
}

/// Time fractions 0, 0.1, …, 1 plus the 0.51 split used as the key comparison point.
pub fn default_alpha_list() -> Vec<f64> {
    let mut alphas: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    alphas.insert(6, 0.51);
    alphas
}

/// Experiment description read from a TOML file. Powers are linear with unit
/// noise power, so `power_total = 100` is 20 dBm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_total: usize,
    pub n_users: usize,
    /// Radar sub-array size; half the array when absent.
    pub n_radar: Option<usize>,
    pub power_total: f64,
    /// Radar share of the power budget; half of `power_total` when absent.
    pub power_radar: Option<f64>,
    pub spacing: f64,
    pub target_angle_deg: f64,
    /// Unit weights when absent.
    pub rate_weights: Option<Vec<f64>>,
    pub rho_grid: Vec<f64>,
    pub n_trials: usize,
    pub seed: u64,
    pub solvers: Vec<SolverKind>,
    pub output_dir: PathBuf,
    pub angle_grid: AngleGrid,
    pub alpha_list: Vec<f64>,
    /// Write measured wall-clock times; off by default so reruns are byte-identical.
    pub record_timing: bool,
    pub separated: SepSolverConfig,
    pub shared: MmConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_total: 16,
            n_users: 4,
            n_radar: None,
            power_total: 100.0,
            power_radar: None,
            spacing: 0.5,
            target_angle_deg: 0.0,
            rate_weights: None,
            rho_grid: default_rho_grid(),
            n_trials: 100,
            seed: 2024,
            solvers: vec![SolverKind::Separated, SolverKind::Shared, SolverKind::Baselines],
            output_dir: PathBuf::from("results"),
            angle_grid: AngleGrid::default(),
            alpha_list: default_alpha_list(),
            record_timing: false,
            separated: SepSolverConfig::default(),
            shared: MmConfig::default(),
        }
    }
}

fn config_err(key: &str, message: impl Into<String>) -> RadcomError {
    RadcomError::Config { key: key.into(), message: message.into() }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.power_total > 0.0 && self.power_total.is_finite()) {
            return Err(config_err("power_total", format!("must be a positive power, got {}", self.power_total)));
        }
        if let Some(pr) = self.power_radar {
            if !(pr > 0.0 && pr < self.power_total) {
                return Err(config_err(
                    "power_radar",
                    format!("must lie strictly between 0 and power_total = {}, got {pr}", self.power_total),
                ));
            }
        }
        if self.n_total < 2 {
            return Err(config_err("n_total", "need at least two antennas"));
        }
        if self.n_users == 0 {
            return Err(config_err("n_users", "need at least one user"));
        }
        if let Some(nr) = self.n_radar {
            if nr == 0 || nr >= self.n_total {
                return Err(config_err("n_radar", format!("must lie in 1..{}, got {nr}", self.n_total)));
            }
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(config_err("spacing", format!("must be positive, got {}", self.spacing)));
        }
        if !self.target_angle_deg.is_finite() || self.target_angle_deg.abs() > 90.0 {
            return Err(config_err("target_angle_deg", "must lie in [-90, 90]"));
        }
        if let Some(w) = &self.rate_weights {
            if w.len() != self.n_users {
                return Err(config_err("rate_weights", format!("expected {} entries, got {}", self.n_users, w.len())));
            }
            if w.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(config_err("rate_weights", "weights must be positive"));
            }
        }
        if self.rho_grid.is_empty() {
            return Err(config_err("rho_grid", "must not be empty"));
        }
        if self.rho_grid.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
            return Err(config_err("rho_grid", "entries must be nonnegative and finite"));
        }
        if self.n_trials == 0 {
            return Err(config_err("n_trials", "must be at least 1"));
        }
        if self.solvers.is_empty() {
            return Err(config_err("solvers", "must name at least one solver"));
        }
        let g = &self.angle_grid;
        if !(g.step_deg > 0.0 && g.stop_deg >= g.start_deg && g.start_deg >= -90.0 && g.stop_deg <= 90.0) {
            return Err(config_err("angle_grid", "need -90 <= start <= stop <= 90 and a positive step"));
        }
        if self.alpha_list.iter().any(|&a| !(0.0..=1.0).contains(&a)) {
            return Err(config_err("alpha_list", "time fractions must lie in [0, 1]"));
        }
        self.separated.validate()?;
        self.shared.validate()?;
        self.deployment(DeploymentKind::Separated).map(|_| ())
    }

    pub fn deployment(&self, kind: DeploymentKind) -> Result<DeploymentSpec> {
        let n_radar = self.n_radar.unwrap_or(self.n_total / 2);
        let power_radar = self.power_radar.unwrap_or(self.power_total / 2.0);
        let spec = DeploymentSpec {
            kind,
            n_radar,
            n_comm: self.n_total - n_radar,
            n_total: self.n_total,
            power_radar,
            power_comm: self.power_total - power_radar,
            power_total: self.power_total,
            n_users: self.n_users,
            rate_weights: self.rate_weights.clone().unwrap_or_else(|| vec![1.0; self.n_users]),
            target_angle: self.target_angle_deg.to_radians(),
            spacing: self.spacing,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn runs(&self, solver: SolverKind) -> bool {
        self.solvers.contains(&solver)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| RadcomError::ConfigParse(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| RadcomError::ConfigParse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

/// Reads and validates a config file. Missing keys take their defaults.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RadcomError::ConfigParse(format!("{}: {e}", path.display())))?;
    ExperimentConfig::from_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let g = default_rho_grid();
        assert_eq!(g.len(), 25);
        assert_eq!(g[0], 0.0);
        assert!((g[1] - 1e-2).abs() < 1e-15);
        assert!((g[24] - 1e3).abs() < 1e-9);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn angle_grid_includes_ends() {
        let d = AngleGrid::default().degrees();
        assert_eq!(d.len(), 361);
        assert_eq!(d[0], -90.0);
        assert_eq!(d[360], 90.0);
        assert_eq!(d[180], 0.0);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = ExperimentConfig::from_toml("n_trails = 3\n").unwrap_err();
        assert!(err.is_config_error());
        assert!(err.to_string().contains("n_trails"));
    }

    #[test]
    fn power_radar_must_fit_budget() {
        let err = ExperimentConfig::from_toml("power_total = 10.0\npower_radar = 12.0\n").unwrap_err();
        assert!(err.to_string().contains("power_radar"));
    }
}
