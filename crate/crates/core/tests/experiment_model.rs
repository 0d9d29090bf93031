//! Physical setup mapped to dynamical parameters.

use approx::assert_relative_eq;
use levsim::experiment::{
    calibrate, coupling_constants, operating_point, photon_number, reference_frequency,
    ExperimentConfig,
};
use levsim::sweep::default_detuning_grid;
use std::f64::consts::TAU;

const OMEGA_M0: f64 = TAU * 33e3;

fn calibrated() -> ExperimentConfig {
    calibrate(&ExperimentConfig::default(), OMEGA_M0).unwrap()
}

#[test]
fn g4_over_omega2_is_detuning_independent_up_to_laser_frequency() {
    let c = calibrated();
    let w0 = reference_frequency(&c).unwrap();
    let base = operating_point(&c, 0.0).unwrap().params;
    let inv0 = base.g.powi(4) / base.omega_m.powi(2);
    for d in default_detuning_grid() {
        let op = operating_point(&c, d * w0).unwrap();
        let inv = op.params.g.powi(4) / op.params.omega_m.powi(2);
        // both scale with n_c; A(Δ)² carries the (ω_c + Δ)² factor
        let a_ratio = c.coupling_coefficient(d * w0) / c.coupling_coefficient(0.0);
        assert_relative_eq!(inv, inv0 * a_ratio * a_ratio, max_relative = 1e-12);
    }
}

#[test]
fn photon_number_is_lorentzian() {
    let c = calibrated();
    let kappa = c.kappa();
    let n0 = photon_number(&c, 0.0).unwrap();
    let wc = c.cavity_frequency();
    for d in [-3e5, -1e5, 5e4, 2e5] {
        let expected = n0 * (kappa * kappa / 4.0) / (kappa * kappa / 4.0 + d * d) * wc / (wc + d);
        assert_relative_eq!(
            photon_number(&c, d).unwrap(),
            expected,
            max_relative = 1e-12
        );
    }
    let mut last = f64::INFINITY;
    for d in [0.0, 1e4, 1e5, 1e6] {
        let n = photon_number(&c, -d).unwrap();
        assert!(n < last);
        last = n;
    }
}

#[test]
fn vanishing_polarizability_switches_off_the_trap() {
    let mut first = None;
    let mut last = f64::INFINITY;
    for eps in [2.0, 1.1, 1.01, 1.0001] {
        let c = ExperimentConfig {
            epsilon_r: eps,
            input_power: Some(1e-3),
            ..ExperimentConfig::default()
        };
        let n = photon_number(&c, 0.0).unwrap();
        let (w, g) = coupling_constants(&c, n, 0.0).unwrap();
        assert!(w < last && g > 0.0);
        first.get_or_insert(w);
        last = w;
    }
    assert!(last < 2e-2 * first.unwrap());
}

#[test]
fn zero_point_motion_grows_away_from_resonance() {
    let c = calibrated();
    let mut last = 0.0;
    for d in [0.0, 1.0, 2.0, 4.0] {
        let w = operating_point(&c, -d * OMEGA_M0).unwrap().params.omega_m;
        let zpm = (levsim::merit::HBAR / (2.0 * c.mass * w)).sqrt();
        assert!(zpm > last);
        last = zpm;
    }
}

#[test]
fn detuning_axis_conversion_is_lossless() {
    let c = calibrated();
    let w0 = reference_frequency(&c).unwrap();
    assert_relative_eq!(w0, OMEGA_M0, max_relative = 1e-9);
    let p = operating_point(&c, -2.0 * w0).unwrap().params;
    let q = p.to_dimensionless(w0).unwrap();
    assert_eq!(q.delta, -2.0);
    let back = q.to_si(w0).unwrap();
    assert_relative_eq!(back.omega_m, p.omega_m, max_relative = 1e-15);
}
