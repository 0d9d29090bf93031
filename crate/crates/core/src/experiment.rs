//! Nanosphere trapped by the field of a high-finesse cavity.
//!
//! The intracavity photon number `n_c(Δ)` sets both the optical trap
//! frequency (`ω_m ∝ √n_c`) and the coupling (`g ∝ n_c^{1/4}`); recoil heating
//! is a fixed fraction of `ω_m`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::merit::HBAR;
use crate::model::SystemParams;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Physical setup. Lengths in meters, mass in kg, power in W, rates in rad/s.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub radius: f64,
    pub mass: f64,
    pub wavelength: f64,
    pub cavity_length: f64,
    pub finesse: f64,
    pub waist: f64,
    pub epsilon_r: f64,
    /// Input power; `None` until [`calibrate`] has run.
    #[serde(default)]
    pub input_power: Option<f64>,
    /// Total cavity loss; `None` means `2κ₀` (extra loss equal to the intrinsic one).
    #[serde(default)]
    pub kappa_total: Option<f64>,
    /// `Γ/ω_m`.
    pub gamma_ratio: f64,
}

impl Default for ExperimentConfig {
    /// Silica sphere of radius 200 nm in a 13 mm cavity of finesse 4·10⁵.
    fn default() -> Self {
        Self {
            radius: 200e-9,
            mass: 7.35e-17,
            wavelength: 1064e-9,
            cavity_length: 13e-3,
            finesse: 4e5,
            waist: 60e-6,
            epsilon_r: 2.1,
            input_power: None,
            kappa_total: None,
            gamma_ratio: 0.15,
        }
    }
}

impl ExperimentConfig {
    pub fn check(&self) -> Result<()> {
        let positive = [
            ("radius", self.radius),
            ("mass", self.mass),
            ("wavelength", self.wavelength),
            ("cavity_length", self.cavity_length),
            ("waist", self.waist),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.finesse.is_finite() && self.finesse > 1.0) {
            return Err(Error::Domain(format!(
                "finesse must exceed 1, got {}",
                self.finesse
            )));
        }
        if !(self.epsilon_r.is_finite() && self.epsilon_r > 1.0) {
            return Err(Error::Domain(format!(
                "epsilon_r must exceed 1, got {}",
                self.epsilon_r
            )));
        }
        if !(self.gamma_ratio.is_finite() && self.gamma_ratio >= 0.0) {
            return Err(Error::Domain(format!(
                "gamma_ratio must be non-negative, got {}",
                self.gamma_ratio
            )));
        }
        if let Some(p) = self.input_power {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::Domain(format!(
                    "input_power must be non-negative, got {p}"
                )));
            }
        }
        if let Some(k) = self.kappa_total {
            if !(k.is_finite() && k > 0.0) {
                return Err(Error::Domain(format!(
                    "kappa_total must be positive, got {k}"
                )));
            }
        }
        Ok(())
    }

    /// Total loss rate actually used.
    pub fn kappa(&self) -> f64 {
        self.kappa_total
            .unwrap_or_else(|| 2.0 * intrinsic_loss(self))
    }

    pub fn wavenumber(&self) -> f64 {
        TAU / self.wavelength
    }

    /// Cavity resonance `ω_c` (rad/s).
    pub fn cavity_frequency(&self) -> f64 {
        TAU * SPEED_OF_LIGHT / self.wavelength
    }

    /// Polarizability coefficient `A(Δ) = (3V_s/2V_m)·(ε_r−1)/(ε_r+2)·(ω_c+Δ)`.
    pub fn coupling_coefficient(&self, delta: f64) -> f64 {
        self.volume_ratio() * clausius_mossotti(self.epsilon_r) * (self.cavity_frequency() + delta)
    }

    fn volume_ratio(&self) -> f64 {
        let v_sphere = 4.0 / 3.0 * PI * self.radius.powi(3);
        let v_mode = PI * self.waist.powi(2) * self.cavity_length;
        1.5 * v_sphere / v_mode
    }
}

fn clausius_mossotti(eps: f64) -> f64 {
    (eps - 1.0) / (eps + 2.0)
}

/// Intrinsic loss `κ₀ = 2π·c/(2𝓕L)` in rad/s.
pub fn intrinsic_loss(config: &ExperimentConfig) -> f64 {
    TAU * SPEED_OF_LIGHT / (2.0 * config.finesse * config.cavity_length)
}

/// Photons per watt of input power at detuning `delta`.
fn photons_per_watt(config: &ExperimentConfig, delta: f64) -> Result<f64> {
    let omega_l = config.cavity_frequency() + delta;
    if !(omega_l > 0.0) {
        return Err(Error::Domain(format!(
            "laser frequency ω_c + Δ must be positive, got {omega_l}"
        )));
    }
    let kappa = config.kappa();
    Ok(0.5 * kappa / (2.0 * HBAR * omega_l) / (0.25 * kappa * kappa + delta * delta))
}

/// Mean intracavity photon number `n_c(Δ)`.
pub fn photon_number(config: &ExperimentConfig, delta: f64) -> Result<f64> {
    config.check()?;
    let power = config.input_power.ok_or_else(|| {
        Error::Domain("input_power is unset; calibrate the configuration first".into())
    })?;
    Ok(power * photons_per_watt(config, delta)?)
}

/// Trap frequency and coupling `(ω_m, g)` for `n_c` photons at detuning `delta`.
pub fn coupling_constants(config: &ExperimentConfig, n_c: f64, delta: f64) -> Result<(f64, f64)> {
    config.check()?;
    if !(n_c.is_finite() && n_c > 0.0) {
        return Err(Error::Domain(format!(
            "degenerate trap: photon number must be positive, got {n_c}"
        )));
    }
    let k2 = config.wavenumber().powi(2);
    let a = config.coupling_coefficient(delta);
    let omega_m = (2.0 * HBAR * k2 * a * n_c / config.mass).sqrt();
    let g = (HBAR * k2 * a * a * n_c / (2.0 * config.mass * omega_m)).sqrt();
    Ok((omega_m, g))
}

/// Fixes `input_power` so that the trap frequency on resonance equals `target_omega_m0`.
pub fn calibrate(config: &ExperimentConfig, target_omega_m0: f64) -> Result<ExperimentConfig> {
    config.check()?;
    if !(target_omega_m0.is_finite() && target_omega_m0 > 0.0) {
        return Err(Error::Domain(format!(
            "calibration target must be positive, got {target_omega_m0}"
        )));
    }
    // ω_m² = 2ħk²A·n_c/m with n_c linear in the power
    let k2 = config.wavenumber().powi(2);
    let n_c = target_omega_m0.powi(2) * config.mass
        / (2.0 * HBAR * k2 * config.coupling_coefficient(0.0));
    let power = n_c / photons_per_watt(config, 0.0)?;
    if !(power.is_finite() && power > 0.0) {
        return Err(Error::Domain(format!(
            "target ω_m0 = {target_omega_m0:.3e} rad/s is unattainable"
        )));
    }
    Ok(ExperimentConfig {
        input_power: Some(power),
        ..*config
    })
}

/// Fixes `epsilon_r` and `input_power` so that resonance yields both targets.
///
/// Uses `g² = A·ω_m/4`, which follows from the two coupling formulas.
pub fn calibrate_coupling(
    config: &ExperimentConfig,
    target_omega_m0: f64,
    target_g0: f64,
) -> Result<ExperimentConfig> {
    if !(target_g0.is_finite() && target_g0 > 0.0) {
        return Err(Error::Domain(format!(
            "coupling target must be positive, got {target_g0}"
        )));
    }
    if !(target_omega_m0.is_finite() && target_omega_m0 > 0.0) {
        return Err(Error::Domain(format!(
            "calibration target must be positive, got {target_omega_m0}"
        )));
    }
    let a0 = 4.0 * target_g0 * target_g0 / target_omega_m0;
    let q = a0 / (config.volume_ratio() * config.cavity_frequency());
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!(
            "g0 = {target_g0:.3e} rad/s needs a Clausius–Mossotti factor {q:.3} outside (0, 1)"
        )));
    }
    let epsilon_r = (1.0 + 2.0 * q) / (1.0 - q);
    calibrate(
        &ExperimentConfig {
            epsilon_r,
            ..*config
        },
        target_omega_m0,
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatingPoint {
    pub n_c: f64,
    /// Rates in rad/s.
    pub params: SystemParams,
}

/// Dynamical parameters at detuning `delta` (rad/s) for a calibrated configuration.
pub fn operating_point(config: &ExperimentConfig, delta: f64) -> Result<OperatingPoint> {
    let n_c = photon_number(config, delta)?;
    let (omega_m, g) = coupling_constants(config, n_c, delta)?;
    Ok(OperatingPoint {
        n_c,
        params: SystemParams::si(
            omega_m,
            delta,
            g,
            config.kappa(),
            config.gamma_ratio * omega_m,
        ),
    })
}

/// Trap frequency on resonance, the unit of the experiment detuning axis.
pub fn reference_frequency(config: &ExperimentConfig) -> Result<f64> {
    Ok(operating_point(config, 0.0)?.params.omega_m)
}
