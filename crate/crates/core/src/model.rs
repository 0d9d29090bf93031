//! Domain types shared by every other module.
//!
//! Quadratures are ordered `(x_c, p_c, x_m, p_m)`. Covariances follow
//! `σ_jk = ⟨r_j r_k + r_k r_j⟩ − 2 R_j R_k`, so the vacuum has `σ = I` and the
//! uncertainty principle reads `σ + iΩ ⪰ 0`.

use nalgebra::{Matrix2, Matrix4, SMatrix, SymmetricEigen, Vector4};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Mat4 = Matrix4<f64>;
pub type Mat2 = Matrix2<f64>;
pub type Vec4 = Vector4<f64>;

/// Absolute slack allowed on the eigenvalues of `σ + iΩ`.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Unit system shared by all rates of a [`SystemParams`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitSystem {
    /// Rates are pure numbers (multiples of a reference mechanical frequency).
    Dimensionless,
    /// Rates are angular frequencies in rad/s.
    Si,
}

/// Dynamical parameters of the cavity + oscillator master equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega_m: f64,
    /// Laser detuning `ω_L − ω_c`; negative is red.
    pub delta: f64,
    pub g: f64,
    /// Total cavity loss rate.
    pub kappa: f64,
    /// Recoil-heating rate.
    pub gamma: f64,
    pub units: UnitSystem,
}

impl SystemParams {
    pub fn dimensionless(omega_m: f64, delta: f64, g: f64, kappa: f64, gamma: f64) -> Self {
        Self {
            omega_m,
            delta,
            g,
            kappa,
            gamma,
            units: UnitSystem::Dimensionless,
        }
    }

    pub fn si(omega_m: f64, delta: f64, g: f64, kappa: f64, gamma: f64) -> Self {
        Self {
            units: UnitSystem::Si,
            ..Self::dimensionless(omega_m, delta, g, kappa, gamma)
        }
    }

    /// Same parameters with a different detuning.
    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..*self }
    }

    /// Divides every SI rate by `omega_ref` (rad/s).
    pub fn to_dimensionless(&self, omega_ref: f64) -> Result<Self> {
        if self.units != UnitSystem::Si {
            return Err(Error::Units(
                "to_dimensionless expects SI parameters".into(),
            ));
        }
        if !(omega_ref.is_finite() && omega_ref > 0.0) {
            return Err(Error::Domain(format!(
                "reference frequency must be positive, got {omega_ref}"
            )));
        }
        Ok(Self::dimensionless(
            self.omega_m / omega_ref,
            self.delta / omega_ref,
            self.g / omega_ref,
            self.kappa / omega_ref,
            self.gamma / omega_ref,
        ))
    }

    /// Multiplies every dimensionless rate by `omega_ref` (rad/s).
    pub fn to_si(&self, omega_ref: f64) -> Result<Self> {
        if self.units != UnitSystem::Dimensionless {
            return Err(Error::Units(
                "to_si expects dimensionless parameters".into(),
            ));
        }
        Ok(Self::si(
            self.omega_m * omega_ref,
            self.delta * omega_ref,
            self.g * omega_ref,
            self.kappa * omega_ref,
            self.gamma * omega_ref,
        ))
    }

    pub fn check(&self) -> Result<()> {
        let fields = [
            ("omega_m", self.omega_m),
            ("delta", self.delta),
            ("g", self.g),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite, got {v}")));
            }
        }
        if self.omega_m <= 0.0 {
            return Err(Error::Domain(format!(
                "omega_m must be positive, got {}",
                self.omega_m
            )));
        }
        for (name, v) in [("kappa", self.kappa), ("gamma", self.gamma), ("g", self.g)] {
            if v < 0.0 {
                return Err(Error::Domain(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Monitoring configuration: cavity homodyne and direct position measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementParams {
    /// Cavity homodyne efficiency.
    pub eta1: f64,
    /// Position-measurement efficiency.
    pub eta2: f64,
    /// Homodyne phase; `0` monitors `x_c`, `π/2` monitors `p_c`.
    pub phi: f64,
}

impl MeasurementParams {
    pub fn new(eta1: f64, eta2: f64, phi: f64) -> Self {
        Self { eta1, eta2, phi }
    }

    pub fn unmonitored() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn with_phi(&self, phi: f64) -> Self {
        Self { phi, ..*self }
    }

    pub fn is_monitored(&self) -> bool {
        self.eta1 > 0.0 || self.eta2 > 0.0
    }

    /// Checks efficiency bounds and reduces `phi` into `[0, π)`.
    pub fn normalized(&self) -> Result<Self> {
        for (name, v) in [("eta1", self.eta1), ("eta2", self.eta2)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if !self.phi.is_finite() {
            return Err(Error::Domain(format!(
                "phi must be finite, got {}",
                self.phi
            )));
        }
        Ok(Self {
            phi: reduce_phase(self.phi),
            ..*self
        })
    }
}

/// Reduces an angle modulo π into `[0, π)`.
pub fn reduce_phase(phi: f64) -> f64 {
    let r = phi.rem_euclid(PI);
    // rem_euclid can round up to exactly π for tiny negative inputs
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Validates a parameter pair, returning it with `phi` normalised.
pub fn validate(
    params: SystemParams,
    meas: MeasurementParams,
) -> Result<(SystemParams, MeasurementParams)> {
    params.check()?;
    let meas = meas.normalized()?;
    Ok((params, meas))
}

/// The symplectic form `Ω = ⊕ [[0, 1], [−1, 0]]` for the two modes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymplecticForm {
    omega: Mat4,
}

impl SymplecticForm {
    pub fn new() -> Self {
        #[rustfmt::skip]
        let omega = Mat4::new(
             0.0, 1.0, 0.0, 0.0,
            -1.0, 0.0, 0.0, 0.0,
             0.0, 0.0, 0.0, 1.0,
             0.0, 0.0,-1.0, 0.0,
        );
        Self { omega }
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.omega
    }
}

impl Default for SymplecticForm {
    fn default() -> Self {
        Self::new()
    }
}

/// Copies the upper triangle onto the lower one so the result is exactly symmetric.
pub fn symmetrize_upper(m: &Mat4) -> Mat4 {
    let mut s = *m;
    for i in 0..4 {
        for j in 0..i {
            s[(i, j)] = s[(j, i)];
        }
    }
    s
}

/// Smallest eigenvalue of the Hermitian matrix `σ + iΩ`.
///
/// Uses the real embedding `[[σ, −Ω], [Ω, σ]]`, whose spectrum is that of
/// `σ + iΩ` with every eigenvalue doubled.
pub fn min_uncertainty_eigenvalue(sigma: &Mat4) -> f64 {
    let omega = SymplecticForm::new().omega;
    let mut emb = SMatrix::<f64, 8, 8>::zeros();
    emb.fixed_view_mut::<4, 4>(0, 0).copy_from(sigma);
    emb.fixed_view_mut::<4, 4>(4, 4).copy_from(sigma);
    emb.fixed_view_mut::<4, 4>(0, 4).copy_from(&(-omega));
    emb.fixed_view_mut::<4, 4>(4, 0).copy_from(&omega);
    SymmetricEigen::new(emb).eigenvalues.min()
}

/// Physicality test `σ + iΩ ⪰ −ε·I`.
pub fn is_physical(sigma: &Mat4) -> bool {
    min_uncertainty_eigenvalue(sigma) >= -PHYSICALITY_TOL
}

/// First and second moments of a two-mode Gaussian state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianState {
    r_mean: Vec4,
    sigma: Mat4,
}

impl GaussianState {
    /// Builds a state from its moments. Only the upper triangle of `sigma` is read.
    pub fn new(r_mean: Vec4, sigma: Mat4) -> Result<Self> {
        if r_mean.iter().chain(sigma.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("state moments must be finite".into()));
        }
        let sigma = symmetrize_upper(&sigma);
        if !is_physical(&sigma) {
            return Err(Error::Domain(format!(
                "covariance violates the uncertainty relation (min eigenvalue of σ+iΩ = {:.3e})",
                min_uncertainty_eigenvalue(&sigma)
            )));
        }
        Ok(Self { r_mean, sigma })
    }

    pub fn r_mean(&self) -> &Vec4 {
        &self.r_mean
    }

    pub fn sigma(&self) -> &Mat4 {
        &self.sigma
    }

    pub fn with_mean(&self, r_mean: Vec4) -> Self {
        Self { r_mean, ..*self }
    }

    pub fn mechanical_block(&self) -> Mat2 {
        crate::merit::reduce_mechanical(&self.sigma)
    }
}

pub fn vacuum_state() -> GaussianState {
    GaussianState {
        r_mean: Vec4::zeros(),
        sigma: Mat4::identity(),
    }
}

/// Product of thermal states with the given mean occupations.
pub fn thermal_state(n_cavity: f64, n_mech: f64) -> Result<GaussianState> {
    for (name, n) in [("n_cavity", n_cavity), ("n_mech", n_mech)] {
        if !(n.is_finite() && n >= 0.0) {
            return Err(Error::Domain(format!(
                "{name} must be a non-negative occupation, got {n}"
            )));
        }
    }
    let c = 2.0 * n_cavity + 1.0;
    let m = 2.0 * n_mech + 1.0;
    Ok(GaussianState {
        r_mean: Vec4::zeros(),
        sigma: Mat4::from_diagonal(&Vec4::new(c, c, m, m)),
    })
}

/// Reduced mechanical covariance plus derived figures of merit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MechanicalSummary {
    #[serde(skip)]
    pub sigma_m: Mat2,
    pub n_ph: f64,
    pub purity: f64,
    pub xi: f64,
    pub xi_db: f64,
    /// Position uncertainty in meters, only in SI contexts.
    pub delta_x: Option<f64>,
}
