//! Gaussian dynamics of a nanosphere levitated in an optical cavity under
//! sideband cooling and time-continuous homodyne / position monitoring.
//!
//! The state of the cavity mode and of the mechanical oscillator is described
//! by a first-moment vector and a 4×4 covariance matrix in the quadrature
//! ordering `(x_c, p_c, x_m, p_m)`, with the convention that the vacuum has
//! unit covariance. The crate is organised bottom-up:
//!
//! - [`model`]: parameter types, Gaussian states and the physicality test.
//! - [`matrices`]: drift, diffusion and measurement matrices.
//! - [`stability`]: Hurwitz and detectability tests.
//! - [`solvers`]: Lyapunov / Riccati steady states, moment integration,
//!   stochastic first-moment trajectories and Markovian feedback.
//! - [`merit`]: phonon number, purity, squeezing and position uncertainty.
//! - [`experiment`]: the high-finesse cavity setup mapped onto model parameters.
//! - [`sweep`]: detuning sweeps, homodyne phase optimisation and stability scans.

// `!(x < tol)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod matrices;
pub mod merit;
pub mod model;
pub mod solvers;
pub mod stability;
pub mod sweep;

pub use error::{Error, Result};
pub use model::{
    GaussianState, Mat2, Mat4, MeasurementParams, MechanicalSummary, SymplecticForm, SystemParams,
    UnitSystem, Vec4,
};
