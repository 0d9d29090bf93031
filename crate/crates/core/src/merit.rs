//! Figures of merit of the mechanical oscillator.

use crate::error::{Error, Result};
use crate::model::{Mat2, Mat4, MechanicalSummary, SystemParams, UnitSystem};

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Covariance of `(x_m, p_m)` after tracing out the cavity.
pub fn reduce_mechanical(sigma: &Mat4) -> Mat2 {
    sigma.fixed_view::<2, 2>(2, 2).into_owned()
}

/// Mean phonon number, exact for zero first moments and a lower bound otherwise.
pub fn phonon_number(sigma_m: &Mat2) -> f64 {
    (sigma_m[(0, 0)] + sigma_m[(1, 1)] - 2.0) / 4.0
}

pub fn purity(sigma_m: &Mat2) -> Result<f64> {
    let det = sigma_m.determinant();
    if !(det.is_finite() && det > 0.0) {
        return Err(Error::Domain(format!(
            "mechanical covariance has non-positive determinant {det}"
        )));
    }
    Ok(1.0 / det.sqrt())
}

/// Eigenvalues of a symmetric 2×2 matrix, smallest first.
pub fn eigenvalues_2x2(m: &Mat2) -> (f64, f64) {
    let half_tr = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let half_diff = 0.5 * (m[(0, 0)] - m[(1, 1)]);
    let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let r = half_diff.hypot(off);
    (half_tr - r, half_tr + r)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Squeezing {
    /// Smallest quadrature variance (vacuum = 1).
    pub xi: f64,
    /// `10·log10(ξ)`; negative values are sub-vacuum.
    pub xi_db: f64,
}

pub fn squeezing(sigma_m: &Mat2) -> Squeezing {
    let (xi, _) = eigenvalues_2x2(sigma_m);
    Squeezing {
        xi,
        xi_db: 10.0 * xi.log10(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositionUncertainty {
    /// `δX = sqrt(ħ·δx² / (m·ω_m))` with `δx² = σ₃₃/2`, in meters.
    pub delta_x: f64,
    /// `δX` of the ground state of the same trap.
    pub vacuum_threshold: f64,
}

impl PositionUncertainty {
    pub fn is_sub_vacuum(&self) -> bool {
        self.delta_x < self.vacuum_threshold
    }
}

pub fn position_uncertainty(
    sigma_m: &Mat2,
    mass: f64,
    omega_m: f64,
    hbar: f64,
) -> Result<PositionUncertainty> {
    for (name, v) in [("mass", mass), ("omega_m", omega_m), ("hbar", hbar)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Units(format!(
                "position uncertainty needs a positive SI {name}, got {v}"
            )));
        }
    }
    let scale = hbar / (mass * omega_m);
    Ok(PositionUncertainty {
        delta_x: (scale * sigma_m[(0, 0)] / 2.0).sqrt(),
        vacuum_threshold: (scale / 2.0).sqrt(),
    })
}

/// All dimensionless figures of merit of a two-mode covariance.
pub fn summarize(sigma: &Mat4) -> Result<MechanicalSummary> {
    let sigma_m = reduce_mechanical(sigma);
    let sq = squeezing(&sigma_m);
    Ok(MechanicalSummary {
        sigma_m,
        n_ph: phonon_number(&sigma_m),
        purity: purity(&sigma_m)?,
        xi: sq.xi,
        xi_db: sq.xi_db,
        delta_x: None,
    })
}

/// Like [`summarize`] but also fills `delta_x`; `params` must be in SI units.
pub fn summarize_si(sigma: &Mat4, params: &SystemParams, mass: f64) -> Result<MechanicalSummary> {
    if params.units != UnitSystem::Si {
        return Err(Error::Units(
            "position uncertainty requires SI system parameters".into(),
        ));
    }
    let mut s = summarize(sigma)?;
    s.delta_x = Some(position_uncertainty(&s.sigma_m, mass, params.omega_m, HBAR)?.delta_x);
    Ok(s)
}
