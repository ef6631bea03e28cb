//! Transmit design for a joint multi-antenna radar-communication platform.
//!
//! Two antenna deployments are supported:
//!
//! * **Separated**: the array is split into a radar sub-array transmitting
//!   probing signals with covariance `R_x` and a communication sub-array
//!   transmitting precoded user streams `P`. Designed by alternating WMMSE
//!   weight/equalizer updates with an exact block solve of the convexified
//!   subproblem (a ball-constrained quadratic for `P`, an ADMM semidefinite
//!   solve for `R_x`).
//! * **Shared**: every antenna transmits precoded user streams, and the
//!   precoders double as the probing waveform. Designed by alternating WMMSE
//!   updates with a majorization-minimization solve under a per-antenna power
//!   constraint.
//!
//! [`baselines`] provides the time-division, frequency-division, pure-radar and
//! pure-communication reference systems, and [`harness`] drives seeded Monte
//! Carlo sweeps that trace the weighted-sum-rate vs probing-power tradeoff.

pub mod baselines;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod sep_solver;
pub mod shared_solver;
pub mod wmmse;

pub use error::{RadcomError, Result};
pub use model::{
    ArrayGeometry, ChannelRealization, DeploymentKind, DeploymentSpec, PrecoderMatrix,
    RadarCovariance,
};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<C64>;
