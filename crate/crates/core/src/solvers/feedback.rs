//! Markovian feedback that cancels the stochastic drift of the first moments.
//!
//! A linear Hamiltonian term `rᵀ f(t)` displaces the first moments by `Ω f dt`.
//! Choosing `f dt = F · dy` with the measurement increment `dy` and `Ω F =
//! −(N − σ_ss Bᵀ)` removes the noise term of the conditional mean equation at
//! steady state. The measurement increment carries the signal as `−B R dt`
//! (the sign convention under which the innovation enters the mean as
//! `+(N − σBᵀ) dw`), so the feedback also adds `−Ω F B` to the drift.

use crate::error::Result;
use crate::matrices::ConditionalMatrices;
use crate::model::{Mat4, SymplecticForm};
use crate::stability::{is_hurwitz, StabilityVerdict};

#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackGain {
    /// Maps the measurement increment onto the Hamiltonian coefficients `f dt`.
    pub f_map: Mat4,
    /// Drift of the first moments with the loop closed, `A − Ω F B`.
    pub closed_loop_drift: Mat4,
    /// Hurwitz verdict of the closed loop. A non-stable verdict is a warning;
    /// the gain is still returned.
    pub closed_loop: StabilityVerdict,
}

impl FeedbackGain {
    /// `‖(N − σBᵀ) + Ω F‖`, zero when the noise is cancelled exactly.
    pub fn cancellation_error(
        &self,
        sigma_ss: &Mat4,
        cm: &ConditionalMatrices,
        symplectic: &SymplecticForm,
    ) -> f64 {
        (cm.innovation_gain(sigma_ss) + symplectic.matrix() * self.f_map).norm()
    }
}

pub fn feedback_gain(
    sigma_ss: &Mat4,
    cm: &ConditionalMatrices,
    symplectic: &SymplecticForm,
) -> Result<FeedbackGain> {
    let omega = symplectic.matrix();
    // Ω⁻¹ = −Ω, so Ω F = −M gives F = Ω M
    let f_map = omega * cm.innovation_gain(sigma_ss);
    let closed_loop_drift = cm.a - omega * f_map * cm.b;
    let closed_loop = is_hurwitz(&closed_loop_drift)?;
    Ok(FeedbackGain {
        f_map,
        closed_loop_drift,
        closed_loop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrices::build_conditional;
    use crate::model::{MeasurementParams, SystemParams};
    use crate::solvers::solve_riccati;

    #[test]
    fn no_measurement_no_gain() {
        let p = SystemParams::dimensionless(1.0, -5.0, 1.0, 2.0, 0.1);
        let cm = build_conditional(&p, &MeasurementParams::unmonitored());
        let ss = solve_riccati(&cm).unwrap();
        let fb = feedback_gain(&ss.sigma, &cm, &SymplecticForm::new()).unwrap();
        assert_eq!(fb.f_map, Mat4::zeros());
        assert_eq!(fb.closed_loop_drift, cm.a);
    }

    #[test]
    fn cancels_noise_and_stabilises() {
        let sym = SymplecticForm::new();
        for (delta, eta1, eta2, phi) in [
            (-2.5, 1.0, 0.0, 1.6),
            (1.0, 0.4, 0.5, 0.3),
            (0.0, 0.0, 1.0, 0.0),
        ] {
            let p = SystemParams::dimensionless(1.0, delta, 1.0, 2.0, 0.1);
            let cm = build_conditional(&p, &MeasurementParams::new(eta1, eta2, phi));
            let ss = solve_riccati(&cm).unwrap();
            let fb = feedback_gain(&ss.sigma, &cm, &sym).unwrap();
            assert!(fb.cancellation_error(&ss.sigma, &cm, &sym) < 1e-12);
            assert!(fb.closed_loop.is_stable, "delta={delta}");
            let expected = cm.a_tilde - ss.sigma * cm.information();
            assert!((fb.closed_loop_drift - expected).norm() < 1e-12);
        }
    }
}
