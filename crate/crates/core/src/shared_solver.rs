//! WMMSE-MM design for the shared deployment.
//!
//! For fixed WMMSE equalizers and weights the precoder subproblem is a
//! quadratic in `p_v = vec(P̌)` under the per-antenna power constraint
//! `diag(P̌P̌ᴴ) = P_t/N_t`. It is solved by majorization-minimization: the
//! quadratic is majorized with `λ_max(Q) I`, which leaves a linear surrogate
//! whose minimizer over the constraint set sets every antenna row colinear
//! with the matching row of `q̂ = q − (Q − λ_max I) p_v`.

use serde::{Deserialize, Serialize};

use crate::linalg::{self, outer, HermitianEigen};
use crate::model::{self, ChannelRealization, DeploymentKind, DeploymentSpec, PrecoderMatrix};
use crate::sep_solver::StopCriterion;
use crate::wmmse::{self, WmmseState};
use crate::{CMat, CVec, RadcomError, Result, C64};

/// How the majorizing constant is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpectralMethod {
    /// Largest eigenvalue from a full Hermitian eigendecomposition.
    #[default]
    ExactEigen,
    /// Gershgorin disc bound, never below the largest eigenvalue.
    Gershgorin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmConfig {
    pub eps_inner: f64,
    pub inner_max_iters: usize,
    pub eps_outer: f64,
    pub outer_max_iters: usize,
    pub spectral_method: SpectralMethod,
    pub stop: StopCriterion,
}

impl Default for MmConfig {
    fn default() -> Self {
        Self {
            eps_inner: 1e-6,
            inner_max_iters: 2000,
            eps_outer: 1e-4,
            outer_max_iters: 300,
            spectral_method: SpectralMethod::ExactEigen,
            stop: StopCriterion::ObjectiveChange,
        }
    }
}

impl MmConfig {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [("eps_inner", self.eps_inner), ("eps_outer", self.eps_outer)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(RadcomError::Config { key: key.into(), message: format!("must be positive, got {v}") });
            }
        }
        Ok(())
    }
}

/// Column-stacks `P̌` into `p_v`.
pub fn vectorize(p: &PrecoderMatrix) -> CVec {
    CVec::from_column_slice(p.matrix().as_slice())
}

/// Inverse of [`vectorize`].
pub fn devectorize(p_v: &CVec, n_users: usize, n_antennas: usize) -> Result<PrecoderMatrix> {
    if p_v.len() != n_users * n_antennas {
        return Err(RadcomError::DimensionMismatch {
            context: "vectorized precoder length",
            expected: n_users * n_antennas,
            got: p_v.len(),
        });
    }
    Ok(PrecoderMatrix::new(CMat::from_column_slice(n_antennas, n_users, p_v.as_slice())))
}

/// `D_k p_v`, the precoder of user `k`.
pub fn user_block(p_v: &CVec, k: usize, n_antennas: usize) -> CVec {
    p_v.rows(k * n_antennas, n_antennas).into_owned()
}

/// `p̃_j`, the entries of antenna `j` across all users.
pub fn antenna_row(p_v: &CVec, j: usize, n_antennas: usize) -> CVec {
    let n_users = p_v.len() / n_antennas;
    CVec::from_iterator(n_users, (0..n_users).map(|k| p_v[k * n_antennas + j]))
}

/// `f(p_v) = p_vᴴ Q p_v − 2 Re{p_vᴴ q} + constant`, equal to the shared
/// objective `ρ Σ μ_k ζ_k − aᴴP̌P̌ᴴa` everywhere on the power sphere
/// `‖p_v‖² = P_t`.
#[derive(Debug, Clone)]
pub struct QuadraticModel {
    q: CMat,
    linear: CVec,
    constant: f64,
    /// Diagonal block of `Q` shared by every user.
    block: CMat,
    n_antennas: usize,
    n_users: usize,
}

impl QuadraticModel {
    pub fn matrix(&self) -> &CMat {
        &self.q
    }

    pub fn linear(&self) -> &CVec {
        &self.linear
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    /// `Q p_v`, using the block-diagonal structure.
    pub fn apply(&self, p_v: &CVec) -> CVec {
        let n = self.n_antennas;
        let mut out = CVec::zeros(p_v.len());
        for k in 0..self.n_users {
            let block = &self.block * p_v.rows(k * n, n);
            out.rows_mut(k * n, n).copy_from(&block);
        }
        out
    }

    pub fn objective(&self, p_v: &CVec) -> f64 {
        p_v.dotc(&self.apply(p_v)).re - 2.0 * self.linear.dotc(p_v).re + self.constant
    }
}

/// Builds `Q`, `q` and the constant from the expansion of the shared objective.
///
/// The noise and unit terms of `ζ_k` are absorbed into `Q` as
/// `Σ_k ρ μ_k w_k (|g_k|² + 1)/P_t · I`, using `p_vᴴp_v = P_t`.
pub fn assemble_quadratic_model(
    state: &WmmseState,
    ch: &ChannelRealization,
    rho: f64,
    weights: &[f64],
    spec: &DeploymentSpec,
) -> Result<QuadraticModel> {
    let n = spec.n_total;
    let k_users = spec.n_users;
    if ch.n_total() != n || ch.n_users() != k_users {
        return Err(RadcomError::DimensionMismatch { context: "channels vs deployment", expected: n, got: ch.n_total() });
    }
    if state.n_users() != k_users || weights.len() != k_users {
        return Err(RadcomError::DimensionMismatch {
            context: "WMMSE state / weights vs users",
            expected: k_users,
            got: state.n_users().min(weights.len()),
        });
    }
    if state.weights.iter().any(|&w| !(w > 0.0)) {
        return Err(RadcomError::InvalidSpec("MSE weights must be positive".into()));
    }
    let a = spec.target_steering();
    let mut block = -outer(&a);
    let mut linear = CVec::zeros(n * k_users);
    let mut absorbed = 0.0;
    let mut constant = 0.0;
    for k in 0..k_users {
        let h = ch.full(k);
        let coef = rho * weights[k] * state.weights[k];
        let g = state.equalizers[k];
        block += outer(h).scale(coef * g.norm_sqr());
        linear.rows_mut(k * n, n).copy_from(&(h * (C64::from(coef) * g.conj())));
        absorbed += coef * (g.norm_sqr() + 1.0) / spec.power_total;
        constant -= rho * weights[k] * state.weights[k].log2();
    }
    for i in 0..n {
        block[(i, i)] += absorbed;
    }
    let mut q = CMat::zeros(n * k_users, n * k_users);
    for k in 0..k_users {
        q.view_mut((k * n, k * n), (n, n)).copy_from(&block);
    }
    Ok(QuadraticModel { q, linear, constant, block, n_antennas: n, n_users: k_users })
}

/// Majorizing constant for `Q`.
pub fn spectral_bound(q: &CMat, method: SpectralMethod) -> f64 {
    match method {
        SpectralMethod::ExactEigen => HermitianEigen::new(q).max(),
        SpectralMethod::Gershgorin => (0..q.nrows())
            .map(|i| {
                let off: f64 = (0..q.ncols()).filter(|&j| j != i).map(|j| q[(i, j)].norm()).sum();
                q[(i, i)].re + off
            })
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Surrogate `g(p_v | p_t)` including the constants dropped by the closed
/// form, so that `g(p_t | p_t) = f(p_t)` and `g ≥ f` on the constraint set.
pub fn majorizer_value(p_v: &CVec, p_t: &CVec, model: &QuadraticModel, lambda_max: f64, power_total: f64) -> f64 {
    let qp_t = model.apply(p_t);
    let shifted = &qp_t - p_t.scale(lambda_max);
    2.0 * p_v.dotc(&shifted).re + 2.0 * lambda_max * power_total - p_t.dotc(&qp_t).re
        - 2.0 * model.linear.dotc(p_v).re
        + model.constant
}

#[derive(Debug, Clone)]
pub struct MmStep {
    pub next: CVec,
    /// Antennas whose row of `q̂` vanished; their previous row was kept.
    pub degenerate_rows: Vec<usize>,
}

/// One closed-form MM step.
pub fn mm_update(p_t: &CVec, model: &QuadraticModel, lambda_max: f64, power_total: f64) -> MmStep {
    let n = model.n_antennas;
    let amp = (power_total / n as f64).sqrt();
    let q_hat = &model.linear - model.apply(p_t) + p_t.scale(lambda_max);
    let floor = 1e-14 * q_hat.norm();
    let mut next = p_t.clone();
    let mut degenerate_rows = Vec::new();
    for j in 0..n {
        let row = antenna_row(&q_hat, j, n);
        let norm = row.norm();
        if norm <= floor || norm == 0.0 {
            degenerate_rows.push(j);
            continue;
        }
        for k in 0..model.n_users {
            next[k * n + j] = row[k] * (amp / norm);
        }
    }
    MmStep { next, degenerate_rows }
}

#[derive(Debug, Clone)]
pub struct MmInnerResult {
    pub p_v: CVec,
    pub iterations: usize,
    /// `f` at the starting point and after every update.
    pub objective_history: Vec<f64>,
    pub degenerate_rows: usize,
    pub converged: bool,
}

/// Iterates [`mm_update`] until `‖Δp_v‖ ≤ ε₂` or the iteration cap.
pub fn run_mm_inner(
    p_v0: &CVec,
    model: &QuadraticModel,
    lambda_max: f64,
    power_total: f64,
    config: &MmConfig,
) -> MmInnerResult {
    let mut p = p_v0.clone();
    let mut objective_history = vec![model.objective(&p)];
    let mut degenerate_rows = 0;
    for it in 1..=config.inner_max_iters {
        let step = mm_update(&p, model, lambda_max, power_total);
        degenerate_rows += step.degenerate_rows.len();
        let delta = (&step.next - &p).norm();
        p = step.next;
        objective_history.push(model.objective(&p));
        if delta <= config.eps_inner {
            return MmInnerResult { p_v: p, iterations: it, objective_history, degenerate_rows, converged: true };
        }
    }
    MmInnerResult { p_v: p, iterations: config.inner_max_iters, objective_history, degenerate_rows, converged: false }
}

/// Rescales every row of `P̌` to the per-antenna power `P_t/N_t`.
pub fn project_rows(p: &CMat, power_total: f64) -> CMat {
    let n = p.nrows();
    let amp = (power_total / n as f64).sqrt();
    let mut out = p.clone();
    for j in 0..n {
        let norm = p.row(j).norm();
        if norm > 0.0 {
            out.row_mut(j).scale_mut(amp / norm);
        } else {
            out.row_mut(j).fill(C64::new(0.0, 0.0));
            out[(j, 0)] = C64::new(amp, 0.0);
        }
    }
    out
}

/// Result of a WMMSE-MM run.
#[derive(Debug, Clone)]
pub struct SharedSolution {
    pub precoder: PrecoderMatrix,
    pub state: WmmseState,
    /// Shared objective at the initial point and after every outer iteration,
    /// each with the optimal `(w, g)` of its point.
    pub objective_history: Vec<f64>,
    pub wsr_history: Vec<f64>,
    /// Largest per-antenna power deviation from `P_t/N_t` at every outer iterate.
    pub row_power_deviation: Vec<f64>,
    /// Largest increase of the inner objective observed in any MM step.
    pub max_inner_ascent: f64,
    pub iterations: usize,
    pub inner_iterations: usize,
    pub degenerate_rows: usize,
    pub converged: bool,
}

impl SharedSolution {
    pub fn wsr(&self) -> f64 {
        *self.wsr_history.last().expect("history holds the initial point")
    }
}

fn max_row_deviation(p: &PrecoderMatrix, power_total: f64) -> f64 {
    let target = power_total / p.n_antennas() as f64;
    p.row_powers().iter().map(|r| (r - target).abs()).fold(0.0, f64::max)
}

fn evaluate_point(p: &PrecoderMatrix, ch: &ChannelRealization, spec: &DeploymentSpec, rho: f64) -> Result<(WmmseState, f64, f64)> {
    let state = wmmse::update_wg_shared(p, ch)?;
    let obj = wmmse::surrogate_objective_shared(p, &state, ch, rho, &spec.rate_weights, spec)?;
    let wsr = model::wsr_shared(p, ch, &spec.rate_weights)?;
    Ok((state, obj.value, wsr))
}

/// Matched-filter start projected onto the per-antenna constraint set.
pub fn initial_precoder(ch: &ChannelRealization, spec: &DeploymentSpec) -> PrecoderMatrix {
    let k_users = ch.n_users();
    let amp = (spec.power_total / k_users as f64).sqrt();
    let mut m = CMat::zeros(ch.n_total(), k_users);
    for k in 0..k_users {
        let h = ch.full(k);
        let norm = h.norm();
        if norm > 0.0 {
            m.set_column(k, &h.scale(amp / norm));
        }
    }
    PrecoderMatrix::new(project_rows(&m, spec.power_total))
}

/// Alternates optimal `(w, g)` updates with the MM precoder solve.
pub fn run_wmmse_mm(ch: &ChannelRealization, spec: &DeploymentSpec, config: &MmConfig, rho: f64) -> Result<SharedSolution> {
    run_wmmse_mm_from(ch, spec, config, rho, initial_precoder(ch, spec))
}

pub fn run_wmmse_mm_from(
    ch: &ChannelRealization,
    spec: &DeploymentSpec,
    config: &MmConfig,
    rho: f64,
    init: PrecoderMatrix,
) -> Result<SharedSolution> {
    spec.validate()?;
    config.validate()?;
    if spec.kind != DeploymentKind::Shared {
        return Err(RadcomError::InvalidSpec("WMMSE-MM needs a shared deployment".into()));
    }
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(RadcomError::Config { key: "rho".into(), message: format!("must be nonnegative, got {rho}") });
    }
    if init.n_antennas() != spec.n_total || init.n_users() != spec.n_users {
        return Err(RadcomError::DimensionMismatch { context: "initial precoder", expected: spec.n_total, got: init.n_antennas() });
    }
    let mut p = init;
    let (mut state, obj0, wsr0) = evaluate_point(&p, ch, spec, rho)?;
    let mut objective_history = vec![obj0];
    let mut wsr_history = vec![wsr0];
    let mut row_power_deviation = vec![max_row_deviation(&p, spec.power_total)];
    let mut max_inner_ascent = f64::NEG_INFINITY;
    let mut inner_iterations = 0;
    let mut degenerate_rows = 0;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=config.outer_max_iters {
        iterations = iter;
        let model = assemble_quadratic_model(&state, ch, rho, &spec.rate_weights, spec).map_err(|e| e.at_iteration(iter))?;
        if !linalg::is_finite(model.matrix()) {
            return Err(RadcomError::NonFinite("quadratic model").at_iteration(iter));
        }
        let lambda = spectral_bound(model.matrix(), config.spectral_method);
        let inner = run_mm_inner(&vectorize(&p), &model, lambda, spec.power_total, config);
        inner_iterations += inner.iterations;
        degenerate_rows += inner.degenerate_rows;
        for w in inner.objective_history.windows(2) {
            max_inner_ascent = max_inner_ascent.max(w[1] - w[0]);
        }
        p = devectorize(&inner.p_v, spec.n_users, spec.n_total)?;
        row_power_deviation.push(max_row_deviation(&p, spec.power_total));

        let (next_state, obj, wsr) = evaluate_point(&p, ch, spec, rho).map_err(|e| e.at_iteration(iter))?;
        state = next_state;
        let prev_obj = *objective_history.last().unwrap();
        let prev_wsr = *wsr_history.last().unwrap();
        objective_history.push(obj);
        wsr_history.push(wsr);
        let done = match config.stop {
            StopCriterion::ObjectiveChange => (obj - prev_obj).abs() <= config.eps_outer * obj.abs().max(1.0),
            StopCriterion::WsrChange => (wsr - prev_wsr).abs() <= config.eps_outer,
        };
        if done {
            converged = true;
            break;
        }
    }

    Ok(SharedSolution {
        precoder: p,
        state,
        objective_history,
        wsr_history,
        row_power_deviation,
        max_inner_ascent,
        iterations,
        inner_iterations,
        degenerate_rows,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_channels;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn vectorize_roundtrip_and_views() {
        let m = CMat::from_fn(3, 2, |i, j| c(i as f64, j as f64 + 0.5));
        let p = PrecoderMatrix::new(m.clone());
        let v = vectorize(&p);
        assert_eq!(devectorize(&v, 2, 3).unwrap(), p);
        for k in 0..2 {
            assert_eq!(user_block(&v, k, 3), p.column(k));
        }
        let rows: f64 = (0..3).map(|j| antenna_row(&v, j, 3).norm_squared()).sum();
        assert!((rows - v.norm_squared()).abs() < 1e-12);
        assert_eq!(antenna_row(&v, 1, 3), m.row(1).transpose());
        assert!(devectorize(&v, 3, 3).is_err());
    }

    #[test]
    fn spectral_bounds_small() {
        let q = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]);
        assert!((spectral_bound(&q, SpectralMethod::ExactEigen) - 3.0).abs() < 1e-12);
        assert!(spectral_bound(&q, SpectralMethod::Gershgorin) >= 3.0 - 1e-12);
        let i = CMat::identity(5, 5);
        assert!((spectral_bound(&i, SpectralMethod::ExactEigen) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_rho_model_is_pure_probing() {
        let spec = DeploymentSpec::default_with_kind(DeploymentKind::Shared);
        let ch = sample_channels(&spec, 4);
        let state = WmmseState { equalizers: vec![c(0.2, 0.1); 4], weights: vec![2.0; 4] };
        let m = assemble_quadratic_model(&state, &ch, 0.0, &spec.rate_weights, &spec).unwrap();
        assert_eq!(m.linear().norm(), 0.0);
        let a = spec.target_steering();
        let block = -outer(&a);
        for k in 0..4 {
            let n = spec.n_total;
            assert!((m.matrix().view((k * n, k * n), (n, n)) - &block).norm() < 1e-12);
        }
    }

    #[test]
    fn single_user_block() {
        let mut spec = DeploymentSpec::default_with_kind(DeploymentKind::Shared);
        spec.n_users = 1;
        spec.rate_weights = vec![1.5];
        let ch = sample_channels(&spec, 9);
        let state = WmmseState { equalizers: vec![c(0.3, -0.2)], weights: vec![1.7] };
        let rho = 2.0;
        let m = assemble_quadratic_model(&state, &ch, rho, &spec.rate_weights, &spec).unwrap();
        let coef = rho * 1.5 * 1.7;
        let h = ch.full(0);
        let a = spec.target_steering();
        let mut expected = outer(h).scale(coef * state.equalizers[0].norm_sqr()) - outer(&a);
        let absorbed = coef * (state.equalizers[0].norm_sqr() + 1.0) / spec.power_total;
        for i in 0..spec.n_total {
            expected[(i, i)] += absorbed;
        }
        assert!((m.matrix() - expected).norm() < 1e-10);
    }

    #[test]
    fn update_keeps_row_powers() {
        let spec = DeploymentSpec::default_with_kind(DeploymentKind::Shared);
        let ch = sample_channels(&spec, 1);
        let p0 = initial_precoder(&ch, &spec);
        let state = wmmse::update_wg_shared(&p0, &ch).unwrap();
        let m = assemble_quadratic_model(&state, &ch, 1.0, &spec.rate_weights, &spec).unwrap();
        let lam = spectral_bound(m.matrix(), SpectralMethod::ExactEigen);
        let step = mm_update(&vectorize(&p0), &m, lam, spec.power_total);
        let p1 = devectorize(&step.next, spec.n_users, spec.n_total).unwrap();
        for r in p1.row_powers() {
            assert!((r - spec.power_total / spec.n_total as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_row_is_kept() {
        // Q = λ I and q = 0 make q̂ vanish identically.
        let spec = DeploymentSpec::even_split(DeploymentKind::Shared, 2, 1, 2.0, 0.0).unwrap();
        let model = QuadraticModel {
            q: CMat::identity(2, 2),
            linear: CVec::zeros(2),
            constant: 0.0,
            block: CMat::identity(2, 2),
            n_antennas: 2,
            n_users: 1,
        };
        let p = CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        let step = mm_update(&p, &model, 1.0, spec.power_total);
        assert_eq!(step.degenerate_rows, vec![0, 1]);
        assert_eq!(step.next, p);
    }
}
