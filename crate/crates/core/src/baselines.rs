//! Reference systems for the tradeoff comparison.
//!
//! Pure MIMO radar points its covariance at the target; pure communication
//! (MU-LP) maximizes the WSR under a total power budget with classic WMMSE.
//! Frequency division runs both at half power in orthogonal bands; time
//! division alternates the full-power systems with time fraction `α`.

use serde::Serialize;

use crate::model::{self, ArrayGeometry, ChannelRealization, DeploymentSpec, PrecoderMatrix, RadarCovariance};
use crate::sep_solver::solve_precoder_block;
use crate::wmmse::{self, WmmseState};
use crate::{CMat, CVec, RadcomError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineLabel {
    FreqDivision,
    TimeDivision,
    PureRadar,
    PureComm,
}

impl BaselineLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            BaselineLabel::FreqDivision => "freq_division",
            BaselineLabel::TimeDivision => "time_division",
            BaselineLabel::PureRadar => "pure_radar",
            BaselineLabel::PureComm => "pure_comm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselinePoint {
    pub label: BaselineLabel,
    /// bps/Hz
    pub wsr: f64,
    /// Linear probing power at the target.
    pub probing: f64,
    /// Fraction of time spent communicating (time division only).
    pub alpha: Option<f64>,
}

/// Maximum-probing covariance `(P/N) a(θ)a(θ)ᴴ` of an `n`-antenna MIMO radar.
pub fn radar_max_power_covariance(angle: f64, geometry: &ArrayGeometry, power: f64) -> RadarCovariance {
    RadarCovariance::from_hermitian_unchecked(model::aligned_covariance(angle, geometry, power))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MulpOptions {
    /// Stop once the WSR improves by less than this.
    pub tol: f64,
    pub max_iters: usize,
    pub bisection_tol: f64,
}

impl Default for MulpOptions {
    fn default() -> Self {
        Self { tol: 1e-4, max_iters: 500, bisection_tol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct MulpSolution {
    pub precoder: PrecoderMatrix,
    pub wsr: f64,
    pub wsr_history: Vec<f64>,
    pub converged: bool,
}

fn shared_wsr(p: &PrecoderMatrix, channels: &[CVec], weights: &[f64]) -> Result<(f64, WmmseState)> {
    let ch = ChannelRealization::new(channels.to_vec(), 0)?;
    let wsr = model::wsr_shared(p, &ch, weights)?;
    Ok((wsr, wmmse::update_wg_shared(p, &ch)?))
}

/// WMMSE multi-user linear precoding under `tr(PPᴴ) ≤ budget`.
pub fn mulp_wmmse(channels: &[CVec], budget: f64, weights: &[f64], opts: &MulpOptions) -> Result<MulpSolution> {
    let k_users = channels.len();
    if k_users == 0 {
        return Err(RadcomError::InvalidSpec("MU-LP needs at least one user".into()));
    }
    if weights.len() != k_users {
        return Err(RadcomError::DimensionMismatch { context: "rate weights", expected: k_users, got: weights.len() });
    }
    let n = channels[0].len();
    let amp = (budget / k_users as f64).sqrt();
    let mut m = CMat::zeros(n, k_users);
    for (k, h) in channels.iter().enumerate() {
        if h.norm() > 0.0 {
            m.set_column(k, &h.scale(amp / h.norm()));
        }
    }
    let mut p = PrecoderMatrix::new(m);
    let zero = CMat::zeros(n, n);
    let (mut wsr, mut state) = shared_wsr(&p, channels, weights)?;
    let mut wsr_history = vec![wsr];
    let mut converged = false;
    for _ in 0..opts.max_iters {
        let next = solve_precoder_block(&state, channels, &zero, 1.0, weights, budget, opts.bisection_tol, None)?;
        p = next.precoder;
        let (next_wsr, next_state) = shared_wsr(&p, channels, weights)?;
        state = next_state;
        let gain = next_wsr - wsr;
        wsr = next_wsr;
        wsr_history.push(wsr);
        if gain.abs() <= opts.tol {
            converged = true;
            break;
        }
    }
    Ok(MulpSolution { precoder: p, wsr, wsr_history, converged })
}

/// Radar and communication at `P_t/2` each in orthogonal bands, full array.
///
/// The WSR is measured within the communication band.
pub fn frequency_division_point(ch: &ChannelRealization, spec: &DeploymentSpec, opts: &MulpOptions) -> Result<BaselinePoint> {
    let half = spec.power_total / 2.0;
    let comm = mulp_wmmse(ch.full_channels(), half, &spec.rate_weights, opts)?;
    Ok(BaselinePoint {
        label: BaselineLabel::FreqDivision,
        wsr: comm.wsr,
        probing: pure_radar_probing(spec, half),
        alpha: None,
    })
}

fn pure_radar_probing(spec: &DeploymentSpec, power: f64) -> f64 {
    let geometry = spec.geometry();
    let cov = radar_max_power_covariance(spec.target_angle, &geometry, power);
    let a = spec.target_steering();
    crate::linalg::quad_form(&a, cov.matrix()).re
}

/// Full-array, full-power MU-LP WSR (computed once per channel realization
/// and reused across time fractions).
pub fn full_power_mulp_wsr(ch: &ChannelRealization, spec: &DeploymentSpec, opts: &MulpOptions) -> Result<f64> {
    Ok(mulp_wmmse(ch.full_channels(), spec.power_total, &spec.rate_weights, opts)?.wsr)
}

/// Time-averaged point of a system communicating a fraction `alpha` of the
/// time and probing the rest, both with the full array at full power.
pub fn time_division_point(ch: &ChannelRealization, spec: &DeploymentSpec, alpha: f64, opts: &MulpOptions) -> Result<BaselinePoint> {
    let full_wsr = if alpha > 0.0 { full_power_mulp_wsr(ch, spec, opts)? } else { 0.0 };
    time_division_from_wsr(full_wsr, spec, alpha)
}

pub fn time_division_from_wsr(full_wsr: f64, spec: &DeploymentSpec, alpha: f64) -> Result<BaselinePoint> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(RadcomError::Config { key: "alpha".into(), message: format!("must lie in [0, 1], got {alpha}") });
    }
    Ok(BaselinePoint {
        label: BaselineLabel::TimeDivision,
        wsr: alpha * full_wsr,
        probing: (1.0 - alpha) * pure_radar_probing(spec, spec.power_total),
        alpha: Some(alpha),
    })
}

pub fn pure_radar_point(spec: &DeploymentSpec) -> BaselinePoint {
    BaselinePoint { label: BaselineLabel::PureRadar, wsr: 0.0, probing: pure_radar_probing(spec, spec.power_total), alpha: None }
}

pub fn pure_comm_point(ch: &ChannelRealization, spec: &DeploymentSpec, opts: &MulpOptions) -> Result<BaselinePoint> {
    let sol = mulp_wmmse(ch.full_channels(), spec.power_total, &spec.rate_weights, opts)?;
    let probing = model::probing_power_shared(&sol.precoder, spec)?;
    Ok(BaselinePoint { label: BaselineLabel::PureComm, wsr: sol.wsr, probing, alpha: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_channels, DeploymentKind};
    use crate::C64;

    #[test]
    fn radar_covariance_properties() {
        let g = ArrayGeometry::half_wavelength(16).unwrap();
        let cov = radar_max_power_covariance(0.0, &g, 100.0);
        for d in cov.diagonal() {
            assert!((d - 100.0 / 16.0).abs() < 1e-12);
        }
        let a = model::steering_vector(0.0, &g);
        assert!((crate::linalg::quad_form(&a, cov.matrix()).re - 1600.0).abs() < 1e-9);
    }

    #[test]
    fn single_user_mulp_is_mrt() {
        let h = CVec::from_vec(vec![C64::new(0.4, -0.3), C64::new(1.1, 0.2), C64::new(-0.5, 0.9)]);
        let sol = mulp_wmmse(std::slice::from_ref(&h), 10.0, &[1.0], &MulpOptions::default()).unwrap();
        assert!((sol.wsr - (1.0 + 10.0 * h.norm_squared()).log2()).abs() < 1e-6);
    }

    #[test]
    fn time_division_endpoints() {
        let spec = DeploymentSpec::default_with_kind(DeploymentKind::Shared);
        let ch = sample_channels(&spec, 3);
        let opts = MulpOptions::default();
        let full = full_power_mulp_wsr(&ch, &spec, &opts).unwrap();
        let comm = time_division_point(&ch, &spec, 1.0, &opts).unwrap();
        assert!((comm.wsr - full).abs() < 1e-12);
        assert_eq!(comm.probing, 0.0);
        let radar = time_division_point(&ch, &spec, 0.0, &opts).unwrap();
        assert_eq!(radar.wsr, 0.0);
        assert!((radar.probing - 1600.0).abs() < 1e-9);
        assert!(time_division_point(&ch, &spec, 1.5, &opts).is_err());
    }

    #[test]
    fn frequency_division_probing() {
        let spec = DeploymentSpec::default_with_kind(DeploymentKind::Shared);
        let ch = sample_channels(&spec, 8);
        let pt = frequency_division_point(&ch, &spec, &MulpOptions::default()).unwrap();
        assert!((pt.probing - 800.0).abs() < 1e-9);
        assert!(pt.wsr > 0.0);
    }
}
