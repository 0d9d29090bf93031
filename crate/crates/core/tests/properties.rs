//! Randomised invariants of the model and solvers.

mod common;

use levsim::matrices::build_conditional;
use levsim::merit::{phonon_number, purity, reduce_mechanical, squeezing};
use levsim::model::{is_physical, reduce_phase};
use levsim::solvers::{riccati_residual, solve_lyapunov, solve_riccati, STEADY_STATE_TOL};
use levsim::stability::{is_detectable, is_hurwitz};
use levsim::{MeasurementParams, SystemParams};
use proptest::prelude::*;
use std::f64::consts::PI;

use common::{min_sym_eig, min_uncertainty_eig};

fn params() -> impl Strategy<Value = SystemParams> {
    (-6.0..6.0f64, 0.0..3.0f64, 0.2..5.0f64, 0.01..1.0f64)
        .prop_map(|(d, g, k, gm)| SystemParams::dimensionless(1.0, d, g, k, gm))
}

fn meas() -> impl Strategy<Value = MeasurementParams> {
    (0.0..=1.0f64, 0.0..=1.0f64, 0.0..PI).prop_map(|(a, b, p)| MeasurementParams::new(a, b, p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn steady_states_are_physical_and_ordered(p in params(), m in meas()) {
        let cm = build_conditional(&p, &m);
        let lyap = solve_lyapunov(&cm.a, &cm.d).ok();
        let ric = solve_riccati(&cm).ok();
        if let Some(l) = &lyap {
            prop_assert!(min_uncertainty_eig(&l.sigma) >= -1e-9);
            prop_assert!(l.residual < STEADY_STATE_TOL);
        }
        if let Some(r) = &ric {
            prop_assert!(min_uncertainty_eig(&r.sigma) >= -1e-9);
            prop_assert!(riccati_residual(&cm, &r.sigma) < STEADY_STATE_TOL);
            let cl = cm.a_tilde - r.sigma * cm.information();
            prop_assert!(is_hurwitz(&cl).unwrap().is_stable);
            let mu = purity(&reduce_mechanical(&r.sigma)).unwrap();
            prop_assert!(mu > 0.0 && mu <= 1.0 + 1e-9);
            prop_assert!(phonon_number(&reduce_mechanical(&r.sigma)) >= -1e-9);
        }
        if let (Some(l), Some(r)) = (&lyap, &ric) {
            prop_assert!(min_sym_eig(&(l.sigma - r.sigma)) >= -1e-9 * l.sigma.norm());
        }
    }

    #[test]
    fn hurwitz_drift_always_has_a_riccati_solution(p in params(), m in meas()) {
        let cm = build_conditional(&p, &m);
        if is_hurwitz(&cm.a).unwrap().is_stable {
            // a stable drift is trivially detectable through any output
            prop_assert!(is_detectable(&cm.b, &cm.a_tilde).unwrap());
            prop_assert!(solve_riccati(&cm).is_ok());
        }
    }

    #[test]
    fn homodyne_phase_has_period_pi(p in params(), m in meas()) {
        let a = build_conditional(&p, &m);
        let b = build_conditional(&p, &m.with_phi(m.phi + PI));
        prop_assert!((a.b - b.b).norm() < 1e-12);
        prop_assert!((a.d_tilde - b.d_tilde).norm() < 1e-12);
        let r = reduce_phase(m.phi + 3.0 * PI);
        prop_assert!((0.0..PI).contains(&r));
    }

    #[test]
    fn diffusion_stays_positive_after_measurement(p in params(), m in meas()) {
        let cm = build_conditional(&p, &m);
        prop_assert!(min_sym_eig(&cm.d_tilde) >= -1e-12);
        prop_assert!(min_sym_eig(&(cm.d - cm.d_tilde)) >= -1e-12);
    }

    #[test]
    fn unit_round_trip(p in params(), w in 1e3..1e7f64) {
        let back = p.to_si(w).unwrap().to_dimensionless(w).unwrap();
        for (x, y) in [(p.delta, back.delta), (p.g, back.g), (p.kappa, back.kappa), (p.gamma, back.gamma)] {
            prop_assert!((x - y).abs() <= 1e-15 * x.abs().max(1e-300) * 4.0);
        }
    }

    #[test]
    fn squeezing_bounded_by_purity(p in params(), m in meas()) {
        let cm = build_conditional(&p, &m);
        if let Ok(r) = solve_riccati(&cm) {
            let sm = reduce_mechanical(&r.sigma);
            // ξ_min · ξ_max = det = 1/μ² and ξ_min ≤ ξ_max
            let sq = squeezing(&sm);
            let mu = purity(&sm).unwrap();
            prop_assert!(sq.xi > 0.0 && sq.xi <= 1.0 / mu + 1e-9);
            prop_assert!(sm.determinant() >= 1.0 - 1e-9);
            prop_assert!(is_physical(&r.sigma));
        }
    }
}
