//! Array geometry, channels and the performance metrics of both deployments.
//!
//! Powers are in noise-normalized linear units (receiver noise power is 1, so
//! 0 dBm maps to 1.0). Angles are radians.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, outer, quad_form};
use crate::{CMat, CVec, RadcomError, Result, C64};

/// Imaginary residue allowed on quadratic forms of Hermitian matrices.
pub const QUAD_FORM_IMAG_TOL: f64 = 1e-10;

pub fn dbm_to_linear(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    n_antennas: usize,
    spacing: f64,
}

impl ArrayGeometry {
    /// `spacing` is the element spacing in wavelengths.
    pub fn new(n_antennas: usize, spacing: f64) -> Result<Self> {
        if n_antennas == 0 {
            return Err(RadcomError::InvalidSpec("array needs at least one antenna".into()));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(RadcomError::InvalidSpec(format!("element spacing must be positive, got {spacing}")));
        }
        Ok(Self { n_antennas, spacing })
    }

    pub fn half_wavelength(n_antennas: usize) -> Result<Self> {
        Self::new(n_antennas, 0.5)
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }
}

/// Transmit steering vector, entry `n` is `exp(i 2π n δ sin θ)`.
pub fn steering_vector(angle: f64, geometry: &ArrayGeometry) -> CVec {
    let phase_step = 2.0 * PI * geometry.spacing * angle.sin();
    CVec::from_iterator(
        geometry.n_antennas,
        (0..geometry.n_antennas).map(|n| C64::from_polar(1.0, phase_step * n as f64)),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeploymentKind {
    Separated,
    Shared,
}

/// Platform parameters. The radar/communication split fields only matter for
/// [`DeploymentKind::Separated`], but are always kept consistent so the same
/// spec can be re-targeted with [`DeploymentSpec::with_kind`].
#[derive(Debug, Clone, PartialEq)]
pub struct DeploymentSpec {
    pub kind: DeploymentKind,
    pub n_radar: usize,
    pub n_comm: usize,
    pub n_total: usize,
    pub power_radar: f64,
    pub power_comm: f64,
    pub power_total: f64,
    pub n_users: usize,
    pub rate_weights: Vec<f64>,
    /// Radians.
    pub target_angle: f64,
    /// Element spacing in wavelengths.
    pub spacing: f64,
}

impl DeploymentSpec {
    /// 16-element half-wavelength ULA, 4 users, 20 dBm total, target at
    /// broadside, antennas and power split evenly between radar and
    /// communication, unit rate weights.
    pub fn default_with_kind(kind: DeploymentKind) -> Self {
        Self::even_split(kind, 16, 4, dbm_to_linear(20.0), 0.0)
            .expect("default deployment is valid")
    }

    /// Even antenna and power split, unit rate weights, half-wavelength spacing.
    pub fn even_split(
        kind: DeploymentKind,
        n_total: usize,
        n_users: usize,
        power_total: f64,
        target_angle: f64,
    ) -> Result<Self> {
        let n_radar = n_total / 2;
        let spec = Self {
            kind,
            n_radar,
            n_comm: n_total - n_radar,
            n_total,
            power_radar: power_total / 2.0,
            power_comm: power_total / 2.0,
            power_total,
            n_users,
            rate_weights: vec![1.0; n_users],
            target_angle,
            spacing: 0.5,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_kind(&self, kind: DeploymentKind) -> Self {
        Self { kind, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(RadcomError::InvalidSpec(msg));
        if self.n_total == 0 {
            return bad("n_total must be at least 1".into());
        }
        if self.n_users == 0 {
            return bad("n_users must be at least 1".into());
        }
        if self.rate_weights.len() != self.n_users {
            return bad(format!(
                "{} rate weights given for {} users",
                self.rate_weights.len(),
                self.n_users
            ));
        }
        if self.rate_weights.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return bad("rate weights must be positive".into());
        }
        if !(self.power_total > 0.0 && self.power_total.is_finite()) {
            return bad(format!("total power must be positive, got {}", self.power_total));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return bad(format!("element spacing must be positive, got {}", self.spacing));
        }
        if !self.target_angle.is_finite() {
            return bad("target angle must be finite".into());
        }
        if self.kind == DeploymentKind::Separated {
            if self.n_radar == 0 || self.n_comm == 0 {
                return bad("separated deployment needs radar and communication antennas".into());
            }
            if self.power_radar <= 0.0 || self.power_comm <= 0.0 {
                return bad("separated deployment needs positive radar and communication power".into());
            }
        }
        if self.n_radar + self.n_comm != self.n_total {
            return bad(format!(
                "antenna split {} + {} does not add up to {}",
                self.n_radar, self.n_comm, self.n_total
            ));
        }
        let split = self.power_radar + self.power_comm;
        if (split - self.power_total).abs() > 1e-9 * self.power_total {
            return bad(format!(
                "power split {} + {} does not add up to {}",
                self.power_radar, self.power_comm, self.power_total
            ));
        }
        Ok(())
    }

    pub fn geometry(&self) -> ArrayGeometry {
        ArrayGeometry { n_antennas: self.n_total, spacing: self.spacing }
    }

    /// Full-array steering vector at the target.
    pub fn target_steering(&self) -> CVec {
        steering_vector(self.target_angle, &self.geometry())
    }

    /// Radar sub-array part `a₁` of the target steering vector.
    pub fn radar_steering(&self) -> CVec {
        self.target_steering().rows(0, self.n_radar).into_owned()
    }

    /// Communication sub-array part `a₂` of the target steering vector.
    pub fn comm_steering(&self) -> CVec {
        self.target_steering().rows(self.n_radar, self.n_comm).into_owned()
    }
}

/// Downlink channels of one Monte Carlo trial. Noise power is fixed to 1.
///
/// The full channel of user `k` is the concatenation `[f_k; h_k]` of its radar
/// sub-array part (first `n_radar` entries) and communication sub-array part.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    full: Vec<CVec>,
    n_radar: usize,
}

impl ChannelRealization {
    pub const NOISE_POWER: f64 = 1.0;

    pub fn new(full: Vec<CVec>, n_radar: usize) -> Result<Self> {
        let n = full.first().map(|h| h.len()).ok_or_else(|| {
            RadcomError::InvalidSpec("channel realization needs at least one user".into())
        })?;
        if let Some(bad) = full.iter().find(|h| h.len() != n) {
            return Err(RadcomError::DimensionMismatch {
                context: "channel vector length",
                expected: n,
                got: bad.len(),
            });
        }
        if n_radar > n {
            return Err(RadcomError::DimensionMismatch {
                context: "radar sub-array size",
                expected: n,
                got: n_radar,
            });
        }
        Ok(Self { full, n_radar })
    }

    pub fn n_users(&self) -> usize {
        self.full.len()
    }

    pub fn n_total(&self) -> usize {
        self.full[0].len()
    }

    pub fn n_radar(&self) -> usize {
        self.n_radar
    }

    pub fn n_comm(&self) -> usize {
        self.n_total() - self.n_radar
    }

    pub fn full(&self, k: usize) -> &CVec {
        &self.full[k]
    }

    pub fn full_channels(&self) -> &[CVec] {
        &self.full
    }

    /// `f_k`
    pub fn radar_part(&self, k: usize) -> nalgebra::DVectorView<'_, C64> {
        self.full[k].rows(0, self.n_radar)
    }

    /// `h_k`
    pub fn comm_part(&self, k: usize) -> nalgebra::DVectorView<'_, C64> {
        self.full[k].rows(self.n_radar, self.n_comm())
    }

    pub fn radar_channels(&self) -> Vec<CVec> {
        (0..self.n_users()).map(|k| self.radar_part(k).into_owned()).collect()
    }

    pub fn comm_channels(&self) -> Vec<CVec> {
        (0..self.n_users()).map(|k| self.comm_part(k).into_owned()).collect()
    }
}

/// RNG for trial `trial` of an experiment seeded with `seed`.
///
/// Each trial reads its own ChaCha stream, so trials can be evaluated in any
/// order or concurrently.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// I.i.d. `CN(0, 1)` channels for every user.
pub fn sample_channels(spec: &DeploymentSpec, seed: u64) -> ChannelRealization {
    sample_channels_with(spec, &mut ChaCha20Rng::seed_from_u64(seed))
}

pub fn sample_channels_for_trial(spec: &DeploymentSpec, seed: u64, trial: u64) -> ChannelRealization {
    sample_channels_with(spec, &mut trial_rng(seed, trial))
}

pub fn sample_channels_with<R: rand::Rng + ?Sized>(spec: &DeploymentSpec, rng: &mut R) -> ChannelRealization {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let full = (0..spec.n_users)
        .map(|_| {
            CVec::from_iterator(
                spec.n_total,
                (0..spec.n_total).map(|_| {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    C64::new(scale * re, scale * im)
                }),
            )
        })
        .collect();
    ChannelRealization { full, n_radar: spec.n_radar }
}

/// Per-user precoders stored as the columns of an `N × K` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderMatrix(CMat);

impl PrecoderMatrix {
    pub fn new(columns: CMat) -> Self {
        Self(columns)
    }

    pub fn zeros(n_antennas: usize, n_users: usize) -> Self {
        Self(CMat::zeros(n_antennas, n_users))
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn n_antennas(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_users(&self) -> usize {
        self.0.ncols()
    }

    pub fn column(&self, k: usize) -> CVec {
        self.0.column(k).into_owned()
    }

    /// `P Pᴴ`
    pub fn gram(&self) -> CMat {
        &self.0 * self.0.adjoint()
    }

    /// `tr(P Pᴴ)`
    pub fn total_power(&self) -> f64 {
        self.0.norm_squared()
    }

    /// `diag(P Pᴴ)`, the average transmit power of each antenna.
    pub fn row_powers(&self) -> Vec<f64> {
        self.0.row_iter().map(|r| r.norm_squared()).collect()
    }
}

/// Hermitian PSD radar transmit covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarCovariance(CMat);

impl RadarCovariance {
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const PSD_TOL: f64 = 1e-8;

    /// Accepts `m` if it is square, Hermitian within 1e-10 and has no
    /// eigenvalue below −1e-8 (both relative to the matrix scale when it
    /// exceeds one).
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(RadcomError::DimensionMismatch {
                context: "radar covariance must be square",
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if !linalg::is_finite(&m) {
            return Err(RadcomError::NonFinite("radar covariance"));
        }
        let scale = m.norm().max(1.0);
        let asym = linalg::max_asymmetry(&m);
        if asym > Self::HERMITIAN_TOL * scale {
            return Err(RadcomError::NotHermitian { asymmetry: asym });
        }
        let m = linalg::hermitian_part(&m);
        if m.nrows() > 0 {
            let min_eig = linalg::HermitianEigen::new(&m).min();
            if min_eig < -Self::PSD_TOL * scale {
                return Err(RadcomError::InvalidSpec(format!(
                    "radar covariance is not PSD (min eigenvalue {min_eig:e})"
                )));
            }
        }
        Ok(Self(m))
    }

    pub fn zeros(n: usize) -> Self {
        Self(CMat::zeros(n, n))
    }

    /// `(P_r / N) I`
    pub fn isotropic(n: usize, power: f64) -> Self {
        Self(CMat::identity(n, n).scale(power / n as f64))
    }

    pub(crate) fn from_hermitian_unchecked(m: CMat) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    /// Largest deviation of a diagonal entry from `power / N`.
    pub fn diagonal_deviation(&self, power: f64) -> f64 {
        let target = power / self.dim() as f64;
        self.diagonal().iter().map(|d| (d - target).abs()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::HermitianEigen::new(&self.0).min()
    }
}

/// Real value of a Hermitian quadratic form, rejecting imaginary residue.
fn real_quad(v: &CVec, m: &CMat) -> f64 {
    let z = quad_form(v, m);
    let scale = z.norm().max(1.0);
    debug_assert!(
        z.im.abs() <= QUAD_FORM_IMAG_TOL * scale,
        "quadratic form has imaginary residue {}",
        z.im
    );
    z.re
}

fn check_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(RadcomError::DimensionMismatch { context, expected, got });
    }
    Ok(())
}

fn check_weights(weights: &[f64], n_users: usize) -> Result<()> {
    check_dim("rate weights", n_users, weights.len())
}

/// Received SINR of every user in the separated deployment.
pub fn sinr_separated(p: &PrecoderMatrix, r_x: &RadarCovariance, ch: &ChannelRealization) -> Result<Vec<f64>> {
    check_dim("precoder rows vs communication sub-array", ch.n_comm(), p.n_antennas())?;
    check_dim("precoder columns vs users", ch.n_users(), p.n_users())?;
    check_dim("radar covariance vs radar sub-array", ch.n_radar(), r_x.dim())?;
    Ok((0..ch.n_users())
        .map(|k| {
            let h = ch.comm_part(k);
            let f = ch.radar_part(k).into_owned();
            let gains: Vec<f64> = p.matrix().column_iter().map(|pj| h.dotc(&pj).norm_sqr()).collect();
            let interference: f64 = gains.iter().sum::<f64>() - gains[k];
            let radar = if f.is_empty() { 0.0 } else { real_quad(&f, r_x.matrix()) };
            gains[k] / (interference + radar + ChannelRealization::NOISE_POWER)
        })
        .collect())
}

/// Received SINR of every user in the shared deployment.
pub fn sinr_shared(p: &PrecoderMatrix, ch: &ChannelRealization) -> Result<Vec<f64>> {
    check_dim("precoder rows vs array size", ch.n_total(), p.n_antennas())?;
    check_dim("precoder columns vs users", ch.n_users(), p.n_users())?;
    Ok((0..ch.n_users())
        .map(|k| {
            let h = ch.full(k);
            let gains: Vec<f64> = p.matrix().column_iter().map(|pj| h.dotc(&pj).norm_sqr()).collect();
            let interference: f64 = gains.iter().sum::<f64>() - gains[k];
            gains[k] / (interference + ChannelRealization::NOISE_POWER)
        })
        .collect())
}

pub fn rates_from_sinr(sinr: &[f64]) -> Vec<f64> {
    sinr.iter().map(|g| (1.0 + g).log2()).collect()
}

fn weighted_sum(rates: &[f64], weights: &[f64]) -> f64 {
    rates.iter().zip(weights).map(|(r, m)| r * m).sum()
}

/// Weighted sum rate (bps/Hz) of the separated deployment.
pub fn wsr_separated(
    p: &PrecoderMatrix,
    r_x: &RadarCovariance,
    ch: &ChannelRealization,
    weights: &[f64],
) -> Result<f64> {
    check_weights(weights, ch.n_users())?;
    Ok(weighted_sum(&rates_from_sinr(&sinr_separated(p, r_x, ch)?), weights))
}

/// Weighted sum rate (bps/Hz) of the shared deployment.
pub fn wsr_shared(p: &PrecoderMatrix, ch: &ChannelRealization, weights: &[f64]) -> Result<f64> {
    check_weights(weights, ch.n_users())?;
    Ok(weighted_sum(&rates_from_sinr(&sinr_shared(p, ch)?), weights))
}

/// Probing power at the target, `a₁ᴴ R_x a₁ + a₂ᴴ P Pᴴ a₂`.
pub fn probing_power_separated(p: &PrecoderMatrix, r_x: &RadarCovariance, spec: &DeploymentSpec) -> Result<f64> {
    check_dim("radar covariance vs radar sub-array", spec.n_radar, r_x.dim())?;
    check_dim("precoder rows vs communication sub-array", spec.n_comm, p.n_antennas())?;
    let a1 = spec.radar_steering();
    let a2 = spec.comm_steering();
    let radar = real_quad(&a1, r_x.matrix());
    let comm: f64 = p.matrix().column_iter().map(|pk| a2.dotc(&pk).norm_sqr()).sum();
    Ok(radar + comm)
}

/// Probing power at the target, `aᴴ P̌ P̌ᴴ a`.
pub fn probing_power_shared(p: &PrecoderMatrix, spec: &DeploymentSpec) -> Result<f64> {
    check_dim("precoder rows vs array size", spec.n_total, p.n_antennas())?;
    let a = spec.target_steering();
    Ok(p.matrix().column_iter().map(|pk| a.dotc(&pk).norm_sqr()).sum())
}

/// Overall transmit covariance of the separated deployment, `blkdiag(R_x, P Pᴴ)`.
pub fn transmit_covariance_separated(p: &PrecoderMatrix, r_x: &RadarCovariance) -> CMat {
    let nr = r_x.dim();
    let nc = p.n_antennas();
    let mut c = CMat::zeros(nr + nc, nr + nc);
    c.view_mut((0, 0), (nr, nr)).copy_from(r_x.matrix());
    c.view_mut((nr, nr), (nc, nc)).copy_from(&p.gram());
    c
}

/// Transmit beampattern `a(θ)ᴴ C a(θ)` in dB over `grid` (radians).
pub fn beampattern(covariance: &CMat, geometry: &ArrayGeometry, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_dim("covariance vs array size", geometry.n_antennas(), covariance.nrows())?;
    check_dim("covariance must be square", covariance.nrows(), covariance.ncols())?;
    let scale = covariance.norm().max(1.0);
    let asym = linalg::max_asymmetry(covariance);
    if asym > RadarCovariance::HERMITIAN_TOL * scale {
        return Err(RadcomError::NotHermitian { asymmetry: asym });
    }
    Ok(grid
        .iter()
        .map(|&theta| {
            let a = steering_vector(theta, geometry);
            (theta, linear_to_db(quad_form(&a, covariance).re.max(0.0)))
        })
        .collect())
}

/// Rank-one covariance `(P/N) a aᴴ` steered at `angle`.
pub fn aligned_covariance(angle: f64, geometry: &ArrayGeometry, power: f64) -> CMat {
    outer(&steering_vector(angle, geometry)).scale(power / geometry.n_antennas() as f64)
}
