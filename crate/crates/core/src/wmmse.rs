//! Rate-WMMSE machinery shared by both solvers.
//!
//! For user `k` with received useful amplitude `s_k = h_kᴴ p_k` and total
//! received power `T_k` (useful + interference + noise), an equalizer `g`
//! gives the mean squared error `ε_k(g) = |g|² T_k − 2 Re{g s_k} + 1`.
//! The augmented WMSE `ξ_k = w_k ε_k − log₂ w_k` is minimized by the MMSE
//! equalizer and `w_k = 1/ε_k^MMSE`, where it equals `1 − R_k` with the rate
//! in bits.

use crate::linalg::quad_form;
use crate::model::{ChannelRealization, DeploymentSpec, PrecoderMatrix, RadarCovariance};
use crate::sep_solver::build_z;
use crate::{RadcomError, Result, C64};

/// MMSE equalizers and MSE weights, one per user.
#[derive(Debug, Clone, PartialEq)]
pub struct WmmseState {
    pub equalizers: Vec<C64>,
    pub weights: Vec<f64>,
}

impl WmmseState {
    pub fn n_users(&self) -> usize {
        self.weights.len()
    }
}

/// Received useful amplitude `s_k` and total received power `T_k` of one user.
#[derive(Debug, Clone, Copy)]
pub struct UserTerms {
    pub signal: C64,
    pub total: f64,
}

impl UserTerms {
    pub fn mse(&self, g: C64) -> f64 {
        g.norm_sqr() * self.total - 2.0 * (g * self.signal).re + 1.0
    }

    pub fn mmse_equalizer(&self) -> C64 {
        self.signal.conj() / self.total
    }

    pub fn mmse(&self) -> f64 {
        (self.total - self.signal.norm_sqr()) / self.total
    }

    pub fn rate(&self) -> f64 {
        -self.mmse().log2()
    }
}

/// Augmented weighted MSE `w ε(g) − log₂ w`.
pub fn augmented_wmse(terms: &UserTerms, g: C64, w: f64) -> f64 {
    w * terms.mse(g) - w.log2()
}

pub fn user_terms_separated(
    p: &PrecoderMatrix,
    r_x: &RadarCovariance,
    ch: &ChannelRealization,
) -> Result<Vec<UserTerms>> {
    check_dims(ch.n_comm(), ch.n_users(), p)?;
    if r_x.dim() != ch.n_radar() {
        return Err(RadcomError::DimensionMismatch {
            context: "radar covariance vs radar sub-array",
            expected: ch.n_radar(),
            got: r_x.dim(),
        });
    }
    Ok((0..ch.n_users())
        .map(|k| {
            let h = ch.comm_part(k);
            let f = ch.radar_part(k).into_owned();
            let received: f64 = p.matrix().column_iter().map(|pj| h.dotc(&pj).norm_sqr()).sum();
            let radar = if f.is_empty() { 0.0 } else { quad_form(&f, r_x.matrix()).re };
            UserTerms {
                signal: h.dotc(&p.matrix().column(k)),
                total: received + radar + ChannelRealization::NOISE_POWER,
            }
        })
        .collect())
}

pub fn user_terms_shared(p: &PrecoderMatrix, ch: &ChannelRealization) -> Result<Vec<UserTerms>> {
    check_dims(ch.n_total(), ch.n_users(), p)?;
    Ok((0..ch.n_users())
        .map(|k| {
            let h = ch.full(k);
            let received: f64 = p.matrix().column_iter().map(|pj| h.dotc(&pj).norm_sqr()).sum();
            UserTerms {
                signal: h.dotc(&p.matrix().column(k)),
                total: received + ChannelRealization::NOISE_POWER,
            }
        })
        .collect())
}

fn check_dims(n_antennas: usize, n_users: usize, p: &PrecoderMatrix) -> Result<()> {
    if p.n_antennas() != n_antennas {
        return Err(RadcomError::DimensionMismatch {
            context: "precoder rows",
            expected: n_antennas,
            got: p.n_antennas(),
        });
    }
    if p.n_users() != n_users {
        return Err(RadcomError::DimensionMismatch {
            context: "precoder columns",
            expected: n_users,
            got: p.n_users(),
        });
    }
    Ok(())
}

fn optimal_state(terms: &[UserTerms]) -> WmmseState {
    let mut equalizers = Vec::with_capacity(terms.len());
    let mut weights = Vec::with_capacity(terms.len());
    for t in terms {
        // Unit noise keeps T_k strictly above |s_k|².
        assert!(
            t.total > t.signal.norm_sqr(),
            "total received power {} does not exceed useful power {}",
            t.total,
            t.signal.norm_sqr()
        );
        equalizers.push(t.mmse_equalizer());
        weights.push(t.total / (t.total - t.signal.norm_sqr()));
    }
    WmmseState { equalizers, weights }
}

/// Optimal equalizers and weights for the separated deployment.
pub fn update_wg_separated(
    p: &PrecoderMatrix,
    r_x: &RadarCovariance,
    ch: &ChannelRealization,
) -> Result<WmmseState> {
    Ok(optimal_state(&user_terms_separated(p, r_x, ch)?))
}

/// Optimal equalizers and weights for the shared deployment.
pub fn update_wg_shared(p: &PrecoderMatrix, ch: &ChannelRealization) -> Result<WmmseState> {
    Ok(optimal_state(&user_terms_shared(p, ch)?))
}

/// Value of a WMMSE surrogate objective together with its components.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateObjective {
    /// `ρ Σ μ_k ξ_k − probing_term`
    pub value: f64,
    /// `ξ_k` (separated) or `ζ_k` (shared) for each user.
    pub per_user_wmse: Vec<f64>,
    /// Radar reward subtracted from the weighted WMSE sum. For the separated
    /// deployment this is the convexified form `a₁ᴴR_x a₁ − tr(Z PPᴴ)`,
    /// which equals the probing power minus `N_tc tr(PPᴴ)`.
    pub probing_term: f64,
}

impl SurrogateObjective {
    fn assemble(per_user_wmse: Vec<f64>, probing_term: f64, rho: f64, weights: &[f64]) -> Self {
        let wmse: f64 = per_user_wmse.iter().zip(weights).map(|(x, m)| m * x).sum();
        Self { value: rho * wmse - probing_term, per_user_wmse, probing_term }
    }
}

fn per_user_wmse(terms: &[UserTerms], state: &WmmseState) -> Result<Vec<f64>> {
    if state.n_users() != terms.len() || state.equalizers.len() != terms.len() {
        return Err(RadcomError::DimensionMismatch {
            context: "WMMSE state users",
            expected: terms.len(),
            got: state.n_users(),
        });
    }
    Ok(terms
        .iter()
        .zip(state.equalizers.iter().zip(&state.weights))
        .map(|(t, (&g, &w))| augmented_wmse(t, g, w))
        .collect())
}

/// Convexified separated-deployment objective
/// `ρ Σ μ_k ξ_k + tr(Z PPᴴ) − a₁ᴴ R_x a₁`.
pub fn surrogate_objective_separated(
    p: &PrecoderMatrix,
    r_x: &RadarCovariance,
    state: &WmmseState,
    ch: &ChannelRealization,
    rho: f64,
    weights: &[f64],
    spec: &DeploymentSpec,
) -> Result<SurrogateObjective> {
    let terms = user_terms_separated(p, r_x, ch)?;
    let xi = per_user_wmse(&terms, state)?;
    check_weight_len(weights, terms.len())?;
    let z = build_z(spec);
    let comm_penalty: f64 = p.matrix().column_iter().map(|pk| quad_form(&pk.into_owned(), z.matrix()).re).sum();
    let radar_gain = quad_form(&spec.radar_steering(), r_x.matrix()).re;
    Ok(SurrogateObjective::assemble(xi, radar_gain - comm_penalty, rho, weights))
}

/// Shared-deployment objective `ρ Σ μ_k ζ_k − aᴴ P̌ P̌ᴴ a`.
pub fn surrogate_objective_shared(
    p: &PrecoderMatrix,
    state: &WmmseState,
    ch: &ChannelRealization,
    rho: f64,
    weights: &[f64],
    spec: &DeploymentSpec,
) -> Result<SurrogateObjective> {
    let terms = user_terms_shared(p, ch)?;
    let zeta = per_user_wmse(&terms, state)?;
    check_weight_len(weights, terms.len())?;
    let a = spec.target_steering();
    let probing: f64 = p.matrix().column_iter().map(|pk| a.dotc(&pk).norm_sqr()).sum();
    Ok(SurrogateObjective::assemble(zeta, probing, rho, weights))
}

fn check_weight_len(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() != n {
        return Err(RadcomError::DimensionMismatch { context: "rate weights", expected: n, got: weights.len() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DeploymentKind;
    use crate::{CMat, CVec};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn unit_channel_unit_precoder() {
        // h = [1; 0] on the comm sub-array, no radar antennas carry power.
        let ch = ChannelRealization::new(vec![CVec::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])], 1).unwrap();
        let p = PrecoderMatrix::new(CMat::from_column_slice(2, 1, &[c(1.0, 0.0), c(0.0, 0.0)]));
        let st = update_wg_separated(&p, &RadarCovariance::zeros(1), &ch).unwrap();
        assert!((st.equalizers[0] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((st.weights[0] - 2.0).abs() < 1e-15);
        let terms = user_terms_separated(&p, &RadarCovariance::zeros(1), &ch).unwrap();
        assert!((terms[0].mmse() - 0.5).abs() < 1e-15);

        let ch = ChannelRealization::new(vec![CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)])], 0).unwrap();
        let st = update_wg_shared(&p, &ch).unwrap();
        assert!((st.equalizers[0] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((st.weights[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_precoder_gives_unit_weight() {
        let spec = DeploymentSpec::default_with_kind(DeploymentKind::Separated);
        let ch = crate::model::sample_channels(&spec, 5);
        let p = PrecoderMatrix::zeros(spec.n_comm, spec.n_users);
        let st = update_wg_separated(&p, &RadarCovariance::isotropic(spec.n_radar, spec.power_radar), &ch).unwrap();
        for (g, w) in st.equalizers.iter().zip(&st.weights) {
            assert_eq!(*g, c(0.0, 0.0));
            assert_eq!(*w, 1.0);
        }
        let st = update_wg_shared(&PrecoderMatrix::zeros(spec.n_total, spec.n_users), &ch).unwrap();
        assert!(st.weights.iter().all(|&w| w == 1.0));
        assert!(st.equalizers.iter().all(|g| g.norm() == 0.0));
    }

    #[test]
    fn perturbing_equalizer_increases_wmse() {
        let t = UserTerms { signal: c(1.2, -0.7), total: 4.0 };
        let g = t.mmse_equalizer();
        let w = 1.0 / t.mmse();
        let at_opt = augmented_wmse(&t, g, w);
        for d in [c(1e-3, 0.0), c(0.0, -1e-3), c(0.2, 0.1)] {
            assert!(augmented_wmse(&t, g + d, w) > at_opt);
        }
        assert!((at_opt - (1.0 - t.rate())).abs() < 1e-12);
    }
}
