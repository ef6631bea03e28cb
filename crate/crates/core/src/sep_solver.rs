//! WMMSE-SDP design for the separated deployment.
//!
//! With the WMMSE equalizers and weights fixed, the convexified objective
//!
//! ```text
//! ρ Σ μ_k ξ_k(P, R_x) + tr(Z PPᴴ) − a₁ᴴ R_x a₁,   Z = N_tc I − a₂a₂ᴴ
//! ```
//!
//! separates into a precoder block (a convex quadratic over the power ball
//! `tr(PPᴴ) ≤ P_c`) and a covariance block (a linear objective over
//! `{R_x ⪰ 0, diag(R_x) = P_r/N_tr}`). The first is solved through the
//! eigendecomposition of its Hessian and a bisection on the power multiplier,
//! the second by ADMM alternating projections onto the fixed-diagonal affine
//! set and the PSD cone.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use nalgebra::{DMatrix, DVector};

use crate::linalg::{self, outer, HermitianEigen};
use crate::model::{
    self, ChannelRealization, DeploymentKind, DeploymentSpec, PrecoderMatrix, RadarCovariance,
};
use crate::wmmse::{self, WmmseState};
use crate::{CMat, CVec, RadcomError, Result, C64};

/// Which quantity the outer loop watches to decide convergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StopCriterion {
    /// `|ΔF| ≤ ε₁ max(1, |F|)` on the regularized objective.
    #[default]
    ObjectiveChange,
    /// `|ΔWSR| ≤ ε₁`.
    WsrChange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    /// Matched-filter columns splitting the budget evenly; isotropic radar.
    #[default]
    Mrt,
    /// Gaussian precoder scaled to the budget; isotropic radar.
    RandomGaussian { seed: u64 },
    #[serde(skip)]
    Provided { precoder: PrecoderMatrix, covariance: RadarCovariance },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SepSolverConfig {
    pub rho: f64,
    pub eps_outer: f64,
    pub admm_penalty: f64,
    pub admm_tol: f64,
    pub admm_max_iters: usize,
    pub bisection_tol: f64,
    pub outer_max_iters: usize,
    pub init: InitStrategy,
    pub stop: StopCriterion,
}

impl Default for SepSolverConfig {
    fn default() -> Self {
        Self {
            rho: 1.0,
            eps_outer: 1e-4,
            admm_penalty: 1.0,
            admm_tol: 1e-6,
            admm_max_iters: 5000,
            bisection_tol: 1e-8,
            outer_max_iters: 300,
            init: InitStrategy::Mrt,
            stop: StopCriterion::ObjectiveChange,
        }
    }
}

impl SepSolverConfig {
    pub fn with_rho(rho: f64) -> Self {
        Self { rho, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eps_outer", self.eps_outer),
            ("admm_penalty", self.admm_penalty),
            ("admm_tol", self.admm_tol),
            ("bisection_tol", self.bisection_tol),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(RadcomError::Config { key: key.into(), message: format!("must be positive, got {v}") });
            }
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(RadcomError::Config { key: "rho".into(), message: format!("must be nonnegative, got {}", self.rho) });
        }
        Ok(())
    }
}

/// `Z(θ) = N_tc I − a₂a₂ᴴ`, PSD with null space spanned by `a₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZMatrix(CMat);

impl ZMatrix {
    pub fn matrix(&self) -> &CMat {
        &self.0
    }
}

pub fn build_z(spec: &DeploymentSpec) -> ZMatrix {
    let a2 = spec.comm_steering();
    let n = a2.len();
    ZMatrix(CMat::identity(n, n).scale(n as f64) - outer(&a2))
}

/// Minimizer of `Σ_k p_kᴴ G p_k − 2 Re{b_kᴴ p_k}` over `Σ_k ‖p_k‖² ≤ budget`.
#[derive(Debug, Clone)]
pub struct BallQuadraticSolution {
    pub columns: CMat,
    /// Multiplier of the power constraint (zero when inactive).
    pub lambda: f64,
}

/// Solves the power-ball constrained quadratic with Hessian `g` (PSD) and
/// linear coefficients in the columns of `b`.
///
/// Returns `None` for the columns when `b = 0`, leaving the choice among the
/// null-space minimizers to the caller.
pub fn solve_ball_quadratic(g: &CMat, b: &CMat, budget: f64, tol: f64) -> Result<Option<BallQuadraticSolution>> {
    if !linalg::is_finite(g) || !linalg::is_finite(b) || !budget.is_finite() {
        return Err(RadcomError::NonFinite("precoder subproblem"));
    }
    if b.norm() == 0.0 {
        return Ok(None);
    }
    let eig = HermitianEigen::new(g);
    let coeffs = eig.vectors.adjoint() * b;
    let energy: Vec<f64> = coeffs.row_iter().map(|r| r.norm_squared()).collect();
    let total_energy: f64 = energy.iter().sum();
    let gamma_max = eig.max().abs().max(1.0);
    let null_tol = 1e-12 * gamma_max;
    let gammas: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();

    let power_at = |lambda: f64| -> f64 {
        gammas
            .iter()
            .zip(&energy)
            .filter(|(&gm, _)| gm + lambda > null_tol)
            .map(|(&gm, &e)| e / (gm + lambda).powi(2))
            .sum()
    };

    let unbounded = gammas
        .iter()
        .zip(&energy)
        .any(|(&gm, &e)| gm <= null_tol && e > 1e-24 * total_energy);

    let lambda = if !unbounded && power_at(0.0) <= budget {
        0.0
    } else {
        let mut lo = 0.0;
        let mut hi = (total_energy / budget).sqrt();
        while power_at(hi) > budget {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if power_at(mid) > budget {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= tol * hi.max(f64::MIN_POSITIVE) || budget - power_at(hi) <= tol * budget {
                break;
            }
        }
        hi
    };

    let mut scaled = coeffs;
    for (i, &gm) in gammas.iter().enumerate() {
        let denom = gm + lambda;
        let s = if denom > null_tol { 1.0 / denom } else { 0.0 };
        scaled.row_mut(i).scale_mut(s);
    }
    Ok(Some(BallQuadraticSolution { columns: &eig.vectors * scaled, lambda }))
}

/// Precoder block solution and its power multiplier.
#[derive(Debug, Clone)]
pub struct PrecoderSolution {
    pub precoder: PrecoderMatrix,
    pub lambda: f64,
}

/// Hessian `ρ Σ_k μ_k w_k |g_k|² h_k h_kᴴ + Z` and linear terms `ρ μ_k w_k conj(g_k) h_k`.
fn precoder_block_terms(
    state: &WmmseState,
    channels: &[CVec],
    z: &CMat,
    rho: f64,
    weights: &[f64],
) -> (CMat, CMat) {
    let n = z.nrows();
    let k_users = channels.len();
    let mut g = z.clone();
    let mut b = CMat::zeros(n, k_users);
    for (k, h) in channels.iter().enumerate() {
        let coef = rho * weights[k] * state.weights[k];
        g += outer(h).scale(coef * state.equalizers[k].norm_sqr());
        b.set_column(k, &(h * C64::from(coef) * state.equalizers[k].conj()));
    }
    (g, b)
}

/// Generic form of the precoder block used by both the separated solver and
/// the MU-LP baseline: channels `channels`, penalty `z`, tie-break direction
/// `null_direction` for the degenerate `b = 0` case.
pub fn solve_precoder_block(
    state: &WmmseState,
    channels: &[CVec],
    z: &CMat,
    rho: f64,
    weights: &[f64],
    budget: f64,
    tol: f64,
    null_direction: Option<&CVec>,
) -> Result<PrecoderSolution> {
    if state.n_users() != channels.len() || weights.len() != channels.len() {
        return Err(RadcomError::DimensionMismatch {
            context: "precoder subproblem users",
            expected: channels.len(),
            got: state.n_users().min(weights.len()),
        });
    }
    if state.weights.iter().any(|&w| !(w > 0.0)) {
        return Err(RadcomError::InvalidSpec("MSE weights must be positive".into()));
    }
    let (g, b) = precoder_block_terms(state, channels, z, rho, weights);
    let n = z.nrows();
    match solve_ball_quadratic(&g, &b, budget, tol)? {
        Some(sol) => Ok(PrecoderSolution { precoder: PrecoderMatrix::new(sol.columns), lambda: sol.lambda }),
        None => {
            // Every minimizer lies in the null space of G; prefer spending the
            // whole budget on the first column along the tie-break direction.
            let mut columns = CMat::zeros(n, channels.len());
            if let Some(dir) = null_direction {
                let curvature = linalg::quad_form(dir, &g).re;
                if curvature <= 1e-10 * g.norm().max(1.0) * dir.norm_squared() {
                    columns.set_column(0, &dir.scale(budget.sqrt() / dir.norm()));
                }
            }
            Ok(PrecoderSolution { precoder: PrecoderMatrix::new(columns), lambda: 0.0 })
        }
    }
}

/// Precoder block of the separated problem for fixed `(w, g)`.
pub fn solve_precoder_subproblem(
    state: &WmmseState,
    ch: &ChannelRealization,
    z: &ZMatrix,
    rho: f64,
    weights: &[f64],
    power_comm: f64,
    bisection_tol: f64,
    spec: &DeploymentSpec,
) -> Result<PrecoderSolution> {
    let a2 = spec.comm_steering();
    solve_precoder_block(
        state,
        &ch.comm_channels(),
        z.matrix(),
        rho,
        weights,
        power_comm,
        bisection_tol,
        Some(&a2),
    )
}

/// Objective of the precoder block, `Σ_k p_kᴴ G p_k − 2 Re{b_kᴴ p_k}`.
pub fn precoder_block_objective(
    p: &PrecoderMatrix,
    state: &WmmseState,
    channels: &[CVec],
    z: &CMat,
    rho: f64,
    weights: &[f64],
) -> f64 {
    let (g, b) = precoder_block_terms(state, channels, z, rho, weights);
    p.matrix()
        .column_iter()
        .zip(b.column_iter())
        .map(|(pk, bk)| {
            let pk = pk.into_owned();
            linalg::quad_form(&pk, &g).re - 2.0 * bk.dotc(&pk).re
        })
        .sum()
}

/// Cost matrix `B = ρ Σ_k μ_k w_k |g_k|² f_k f_kᴴ − a₁a₁ᴴ` of the covariance block.
pub fn covariance_cost(
    state: &WmmseState,
    ch: &ChannelRealization,
    rho: f64,
    weights: &[f64],
    spec: &DeploymentSpec,
) -> CMat {
    let a1 = spec.radar_steering();
    let mut cost = -outer(&a1);
    for k in 0..ch.n_users() {
        let f = ch.radar_part(k).into_owned();
        cost += outer(&f).scale(rho * weights[k] * state.weights[k] * state.equalizers[k].norm_sqr());
    }
    cost
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmOptions {
    pub penalty: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for AdmmOptions {
    fn default() -> Self {
        let c = SepSolverConfig::default();
        Self { penalty: c.admm_penalty, tol: c.admm_tol, max_iters: c.admm_max_iters }
    }
}

/// ADMM iterate in normalized units (unit diagonal), reusable as a warm start.
#[derive(Debug, Clone)]
pub struct AdmmWarmStart {
    state: CMat,
    penalty: f64,
}

#[derive(Debug, Clone)]
pub struct CovarianceSolution {
    pub covariance: RadarCovariance,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub warm_start: AdmmWarmStart,
}

const RELAXATION: f64 = 1.5;
const ANDERSON_MEMORY: usize = 8;
const PENALTY_UPDATE_PERIOD: usize = 50;

/// One splitting step evaluated at the combined iterate `V = Y + U`.
struct SplitPoint {
    psd: CMat,
    dual: CMat,
    step: CMat,
    primal: f64,
    dual_res: f64,
    eps_primal: f64,
    eps_dual: f64,
}

fn split_point(v: &CMat, cost: &CMat, penalty: f64, tol: f64) -> SplitPoint {
    let n = v.nrows();
    let psd = linalg::project_psd(v);
    let dual = v - &psd;
    let mut affine = &psd - &dual - cost.unscale(penalty);
    for i in 0..n {
        affine[(i, i)] = C64::new(1.0, 0.0);
    }
    let step = (&affine - &psd).scale(RELAXATION);
    // Y ⪰ 0 and S = -σU ⪰ 0 with YS = 0, so these two residuals are the full KKT gap.
    let primal = (0..n).map(|i| (psd[(i, i)].re - 1.0).powi(2)).sum::<f64>().sqrt();
    let mut off = cost + dual.scale(penalty);
    for i in 0..n {
        off[(i, i)] = C64::new(0.0, 0.0);
    }
    let dual_res = off.norm();
    let sqrt_n = (n as f64).sqrt();
    SplitPoint {
        eps_primal: tol * sqrt_n + tol * psd.norm(),
        eps_dual: tol * sqrt_n + tol * (penalty * dual.norm()).max(1.0),
        psd,
        dual,
        step,
        primal,
        dual_res,
    }
}

fn flatten(m: &CMat) -> DVector<f64> {
    DVector::from_iterator(2 * m.len(), m.iter().flat_map(|z| [z.re, z.im]))
}

fn unflatten(x: &DVector<f64>, n: usize) -> CMat {
    CMat::from_iterator(n, n, x.as_slice().chunks(2).map(|c| C64::new(c[0], c[1])))
}

/// Type-II Anderson extrapolation over the last few fixed-point steps.
struct Anderson {
    dx: Vec<DVector<f64>>,
    dg: Vec<DVector<f64>>,
    last: Option<(DVector<f64>, DVector<f64>)>,
}

impl Anderson {
    fn new() -> Self {
        Self { dx: Vec::new(), dg: Vec::new(), last: None }
    }

    fn reset(&mut self) {
        self.dx.clear();
        self.dg.clear();
        self.last = None;
    }

    fn next(&mut self, x: DVector<f64>, g: DVector<f64>) -> DVector<f64> {
        if let Some((px, pg)) = self.last.take() {
            if self.dx.len() == ANDERSON_MEMORY {
                self.dx.remove(0);
                self.dg.remove(0);
            }
            self.dx.push(&x - px);
            self.dg.push(&g - pg);
        }
        let plain = &x + &g;
        self.last = Some((x, g.clone()));
        let m = self.dg.len();
        if m == 0 {
            return plain;
        }
        let mut gram = DMatrix::<f64>::from_fn(m, m, |i, j| self.dg[i].dot(&self.dg[j]));
        let reg = 1e-10 * (0..m).map(|i| gram[(i, i)]).fold(0.0, f64::max);
        for i in 0..m {
            gram[(i, i)] += reg;
        }
        let rhs = DVector::from_fn(m, |i, _| self.dg[i].dot(&g));
        let Some(gamma) = gram.lu().solve(&rhs) else {
            return plain;
        };
        if !gamma.iter().all(|v| v.is_finite()) {
            return plain;
        }
        let mut out = plain;
        for i in 0..m {
            out -= (&self.dx[i] + &self.dg[i]).scale(gamma[i]);
        }
        out
    }
}

/// Minimizes `tr(B R)` over `{R ⪰ 0, diag(R) = power / N}`.
///
/// Works on the normalized problem with unit diagonal. Each step projects onto the
/// fixed-diagonal affine set and onto the PSD cone; the combined iterate is
/// extrapolated with a safeguarded Anderson step.
pub fn solve_fixed_diagonal_sdp(
    cost: &CMat,
    power: f64,
    opts: &AdmmOptions,
    warm: Option<&AdmmWarmStart>,
) -> Result<CovarianceSolution> {
    let n = cost.nrows();
    if cost.ncols() != n {
        return Err(RadcomError::DimensionMismatch { context: "covariance cost", expected: n, got: cost.ncols() });
    }
    if !linalg::is_finite(cost) {
        return Err(RadcomError::NonFinite("covariance cost"));
    }
    let diag_value = power / n as f64;
    let cost = linalg::hermitian_part(cost);
    let cost_norm = cost.norm();
    let identity = CMat::identity(n, n);
    if cost_norm == 0.0 {
        return Ok(CovarianceSolution {
            covariance: RadarCovariance::from_hermitian_unchecked(identity.scale(diag_value)),
            iterations: 0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            warm_start: AdmmWarmStart { state: identity, penalty: opts.penalty },
        });
    }
    let cost = cost.unscale(cost_norm);

    let (mut v, mut penalty) = match warm {
        Some(w) if w.state.nrows() == n => (w.state.clone(), w.penalty),
        _ => (identity, opts.penalty),
    };
    let mut pt = split_point(&v, &cost, penalty, opts.tol);
    let mut accel = Anderson::new();

    for iter in 1..=opts.max_iters {
        if pt.primal <= pt.eps_primal && pt.dual_res <= pt.eps_dual {
            return Ok(finish_covariance(pt, v, penalty, diag_value, iter - 1));
        }
        if iter % PENALTY_UPDATE_PERIOD == 0 {
            let ratio = (pt.primal / pt.eps_primal) / (pt.dual_res / pt.eps_dual);
            let factor = if ratio > 10.0 {
                2.0
            } else if ratio < 0.1 {
                0.5
            } else {
                1.0
            };
            if factor != 1.0 {
                penalty *= factor;
                v = &pt.psd + pt.dual.unscale(factor);
                pt = split_point(&v, &cost, penalty, opts.tol);
                accel.reset();
            }
        }
        let plain = &v + &pt.step;
        let candidate = unflatten(&accel.next(flatten(&v), flatten(&pt.step)), n);
        let next_pt = split_point(&candidate, &cost, penalty, opts.tol);
        if next_pt.step.norm() <= pt.step.norm() {
            v = candidate;
            pt = next_pt;
        } else {
            pt = split_point(&plain, &cost, penalty, opts.tol);
            v = plain;
            accel.reset();
        }
    }
    Err(RadcomError::AdmmNotConverged { iterations: opts.max_iters, primal: pt.primal, dual: pt.dual_res })
}

fn finish_covariance(pt: SplitPoint, state: CMat, penalty: f64, diag_value: f64, iterations: usize) -> CovarianceSolution {
    // Re-pin the diagonal by a diagonal congruence, which keeps the matrix PSD.
    let n = pt.psd.nrows();
    let sym = linalg::hermitian_part(&pt.psd);
    let scale: Vec<f64> = (0..n).map(|i| 1.0 / sym[(i, i)].re.max(f64::MIN_POSITIVE).sqrt()).collect();
    let mut r = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            r[(i, j)] = sym[(i, j)] * (diag_value * scale[i] * scale[j]);
        }
        r[(i, i)] = C64::new(diag_value, 0.0);
    }
    CovarianceSolution {
        covariance: RadarCovariance::from_hermitian_unchecked(linalg::hermitian_part(&r)),
        iterations,
        primal_residual: pt.primal,
        dual_residual: pt.dual_res,
        warm_start: AdmmWarmStart { state, penalty },
    }
}

/// Covariance block of the separated problem for fixed `(w, g)`.
pub fn solve_covariance_subproblem(
    state: &WmmseState,
    ch: &ChannelRealization,
    rho: f64,
    weights: &[f64],
    spec: &DeploymentSpec,
    opts: &AdmmOptions,
    warm: Option<&AdmmWarmStart>,
) -> Result<CovarianceSolution> {
    let cost = covariance_cost(state, ch, rho, weights, spec);
    solve_fixed_diagonal_sdp(&cost, spec.power_radar, opts, warm)
}

/// Result of a WMMSE-SDP run.
#[derive(Debug, Clone)]
pub struct SepSolution {
    pub precoder: PrecoderMatrix,
    pub covariance: RadarCovariance,
    pub state: WmmseState,
    /// Convexified objective at the initial point and after every iteration,
    /// each evaluated with the optimal `(w, g)` of its point.
    pub objective_history: Vec<f64>,
    pub wsr_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub admm_iterations: usize,
}

impl SepSolution {
    pub fn wsr(&self) -> f64 {
        *self.wsr_history.last().expect("history holds the initial point")
    }
}

fn initial_point(ch: &ChannelRealization, spec: &DeploymentSpec, init: &InitStrategy) -> Result<(PrecoderMatrix, RadarCovariance)> {
    let iso = RadarCovariance::isotropic(spec.n_radar, spec.power_radar);
    let k_users = ch.n_users();
    match init {
        InitStrategy::Mrt => {
            let mut m = CMat::zeros(spec.n_comm, k_users);
            let amp = (spec.power_comm / k_users as f64).sqrt();
            for k in 0..k_users {
                let h = ch.comm_part(k);
                let norm = h.norm();
                if norm > 0.0 {
                    m.set_column(k, &h.scale(amp / norm));
                }
            }
            Ok((PrecoderMatrix::new(m), iso))
        }
        InitStrategy::RandomGaussian { seed } => {
            let mut rng = ChaCha20Rng::seed_from_u64(*seed);
            let mut m = CMat::zeros(spec.n_comm, k_users);
            let fake = DeploymentSpec { n_total: spec.n_comm, n_radar: 0, n_comm: spec.n_comm, ..spec.clone() };
            let draws = model::sample_channels_with(&fake, &mut rng);
            for k in 0..k_users {
                m.set_column(k, draws.full(k));
            }
            let norm = m.norm();
            Ok((PrecoderMatrix::new(m.scale(spec.power_comm.sqrt() / norm)), iso))
        }
        InitStrategy::Provided { precoder, covariance } => {
            if precoder.n_antennas() != spec.n_comm || precoder.n_users() != k_users {
                return Err(RadcomError::DimensionMismatch {
                    context: "provided precoder",
                    expected: spec.n_comm,
                    got: precoder.n_antennas(),
                });
            }
            if covariance.dim() != spec.n_radar {
                return Err(RadcomError::DimensionMismatch {
                    context: "provided covariance",
                    expected: spec.n_radar,
                    got: covariance.dim(),
                });
            }
            Ok((precoder.clone(), covariance.clone()))
        }
    }
}

/// Regularized objective at `(P, R_x)` with its optimal `(w, g)`, plus the WSR.
fn evaluate_point(
    p: &PrecoderMatrix,
    r: &RadarCovariance,
    ch: &ChannelRealization,
    spec: &DeploymentSpec,
    rho: f64,
) -> Result<(WmmseState, f64, f64)> {
    let state = wmmse::update_wg_separated(p, r, ch)?;
    let obj = wmmse::surrogate_objective_separated(p, r, &state, ch, rho, &spec.rate_weights, spec)?;
    let wsr = model::wsr_separated(p, r, ch, &spec.rate_weights)?;
    Ok((state, obj.value, wsr))
}

/// Alternates optimal `(w, g)` updates with exact block solves of the
/// convexified subproblem until the stopping criterion is met.
pub fn run_wmmse_sdp(ch: &ChannelRealization, spec: &DeploymentSpec, config: &SepSolverConfig) -> Result<SepSolution> {
    spec.validate()?;
    config.validate()?;
    if spec.kind != DeploymentKind::Separated {
        return Err(RadcomError::InvalidSpec("WMMSE-SDP needs a separated deployment".into()));
    }
    if ch.n_radar() != spec.n_radar || ch.n_total() != spec.n_total || ch.n_users() != spec.n_users {
        return Err(RadcomError::DimensionMismatch {
            context: "channel realization vs deployment",
            expected: spec.n_total,
            got: ch.n_total(),
        });
    }
    let rho = config.rho;
    let weights = &spec.rate_weights;
    let z = build_z(spec);
    let comm_channels = ch.comm_channels();
    let a2 = spec.comm_steering();
    let admm = AdmmOptions { penalty: config.admm_penalty, tol: config.admm_tol, max_iters: config.admm_max_iters };

    let (mut p, mut r) = initial_point(ch, spec, &config.init)?;
    let (mut state, obj0, wsr0) = evaluate_point(&p, &r, ch, spec, rho)?;
    let mut objective_history = vec![obj0];
    let mut wsr_history = vec![wsr0];
    let mut warm: Option<AdmmWarmStart> = None;
    let mut admm_iterations = 0;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=config.outer_max_iters {
        iterations = iter;
        let step = || -> Result<(PrecoderMatrix, CovarianceSolution)> {
            let pre = solve_precoder_block(
                &state,
                &comm_channels,
                z.matrix(),
                rho,
                weights,
                spec.power_comm,
                config.bisection_tol,
                Some(&a2),
            )?;
            let cov = solve_covariance_subproblem(&state, ch, rho, weights, spec, &admm, warm.as_ref())?;
            Ok((pre.precoder, cov))
        };
        let (p_new, cov) = step().map_err(|e| e.at_iteration(iter))?;
        admm_iterations += cov.iterations;

        // ADMM is inexact; never accept a covariance that does worse than the current one.
        let cost = covariance_cost(&state, ch, rho, weights, spec);
        let r_new = if linalg::trace_product_re(&cost, cov.covariance.matrix())
            <= linalg::trace_product_re(&cost, r.matrix())
        {
            cov.covariance
        } else {
            r.clone()
        };
        warm = Some(cov.warm_start);
        p = p_new;
        r = r_new;

        let (next_state, obj, wsr) = evaluate_point(&p, &r, ch, spec, rho).map_err(|e| e.at_iteration(iter))?;
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

    Ok(SepSolution {
        precoder: p,
        covariance: r,
        state,
        objective_history,
        wsr_history,
        iterations,
        converged,
        admm_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_channels, ArrayGeometry};

    #[test]
    fn z_structure() {
        let spec = DeploymentSpec::default_with_kind(DeploymentKind::Separated);
        let z = build_z(&spec);
        let a2 = spec.comm_steering();
        let n = spec.n_comm as f64;
        assert!((z.matrix() * &a2).norm() < 1e-12);
        let trace: f64 = (0..spec.n_comm).map(|i| z.matrix()[(i, i)].re).sum();
        assert!((trace - n * (n - 1.0)).abs() < 1e-12);
        let eig = HermitianEigen::new(z.matrix());
        assert!(eig.values[0].abs() < 1e-8);
        for v in &eig.values[1..] {
            assert!((v - n).abs() < 1e-8);
        }
        // A vector orthogonal to a₂ (broadside: alternating signs).
        let x = CVec::from_iterator(spec.n_comm, (0..spec.n_comm).map(|i| C64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0)));
        let q = linalg::quad_form(&x, z.matrix()).re;
        assert!((q - n * x.norm_squared()).abs() < 1e-9);
    }

    #[test]
    fn zero_rho_precoder_tie_break() {
        let spec = DeploymentSpec::default_with_kind(DeploymentKind::Separated);
        let ch = sample_channels(&spec, 2);
        let state = WmmseState { equalizers: vec![C64::new(0.3, 0.1); 4], weights: vec![1.5; 4] };
        let sol = solve_precoder_subproblem(&state, &ch, &build_z(&spec), 0.0, &spec.rate_weights, spec.power_comm, 1e-8, &spec).unwrap();
        let a2 = spec.comm_steering();
        let expected = a2.scale(spec.power_comm.sqrt() / a2.norm());
        assert!((sol.precoder.column(0) - expected).norm() < 1e-12);
        for k in 1..4 {
            assert_eq!(sol.precoder.column(k).norm(), 0.0);
        }
    }

    #[test]
    fn inactive_budget_keeps_lambda_zero() {
        // Strong curvature, tiny linear term: the unconstrained optimum is feasible.
        let g = CMat::identity(3, 3).scale(10.0);
        let b = CMat::from_element(3, 2, C64::new(0.1, 0.0));
        let sol = solve_ball_quadratic(&g, &b, 50.0, 1e-10).unwrap().unwrap();
        assert_eq!(sol.lambda, 0.0);
        assert!((sol.columns - b.scale(0.1)).norm() < 1e-12);
    }

    #[test]
    fn covariance_block_constant_objective() {
        let cost = CMat::identity(4, 4);
        let sol = solve_fixed_diagonal_sdp(&cost, 20.0, &AdmmOptions::default(), None).unwrap();
        assert!(sol.covariance.diagonal_deviation(20.0) < 1e-12);
        assert!(sol.covariance.min_eigenvalue() > -1e-8);
    }

    #[test]
    fn covariance_block_aligned_optimum() {
        let g = ArrayGeometry::half_wavelength(4).unwrap();
        let angle = 0.3;
        let a = model::steering_vector(angle, &g);
        let sol = solve_fixed_diagonal_sdp(&(-outer(&a)), 40.0, &AdmmOptions::default(), None).unwrap();
        let expected = model::aligned_covariance(angle, &g, 40.0);
        assert!((sol.covariance.matrix() - expected).norm() < 1e-3, "{}", sol.covariance.matrix());
    }

    #[test]
    fn admm_reports_non_convergence() {
        let g = ArrayGeometry::half_wavelength(4).unwrap();
        let a = model::steering_vector(0.3, &g);
        let opts = AdmmOptions { max_iters: 2, ..AdmmOptions::default() };
        let err = solve_fixed_diagonal_sdp(&(-outer(&a)), 40.0, &opts, None).unwrap_err();
        assert!(matches!(err, RadcomError::AdmmNotConverged { iterations: 2, .. }));
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let mut g = CMat::identity(2, 2);
        g[(0, 1)] = C64::new(f64::NAN, 0.0);
        let b = CMat::from_element(2, 1, C64::new(1.0, 0.0));
        assert!(matches!(solve_ball_quadratic(&g, &b, 1.0, 1e-8), Err(RadcomError::NonFinite(_))));
    }
}
