//! Steady states of the covariance equations.

use nalgebra::SMatrix;

use super::ode::Dopri5;
use crate::error::{Error, Result};
use crate::matrices::ConditionalMatrices;
use crate::model::{is_physical, min_uncertainty_eigenvalue, Mat4};
use crate::stability::{is_detectable, is_hurwitz};

/// Relative residual accepted for a steady state.
pub const STEADY_STATE_TOL: f64 = 1e-10;

/// Flow tolerances on the relative residual tried before Newton polishing.
const FLOW_TOLERANCES: [f64; 3] = [1e-6, 1e-9, 1e-12];
const MAX_FLOW_STEPS: usize = 2_000_000;
const MAX_FLOW_TIME: f64 = 1e9;
const MAX_NEWTON_STEPS: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SolverEffort {
    /// Direct linear solve of the vectorised Lyapunov equation.
    Direct,
    /// Riccati flow integrated from the vacuum, then Newton refinement.
    RiccatiFlow {
        flow_time: f64,
        flow_steps: usize,
        newton_steps: usize,
    },
    /// Newton refinement from a caller-supplied stabilising guess.
    WarmNewton { newton_steps: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyState {
    pub sigma: Mat4,
    /// Normwise relative residual of the defining equation.
    pub residual: f64,
    pub effort: SolverEffort,
}

/// Solves `A X + X Aᵀ + Q = 0` through the 16×16 Kronecker system.
pub(crate) fn lyapunov_kron(a: &Mat4, q: &Mat4) -> Result<Mat4> {
    let mut k = SMatrix::<f64, 16, 16>::zeros();
    // column-major vec: vec(AX) = (I ⊗ A) vec X, vec(XAᵀ) = (A ⊗ I) vec X
    for j in 0..4 {
        for i in 0..4 {
            let row = i + 4 * j;
            for l in 0..4 {
                k[(row, l + 4 * j)] += a[(i, l)];
                k[(row, i + 4 * l)] += a[(j, l)];
            }
        }
    }
    let rhs = SMatrix::<f64, 16, 1>::from_iterator(q.iter().map(|v| -v));
    let x = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular Lyapunov operator".into()))?;
    let x = Mat4::from_iterator(x.iter().copied());
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite Lyapunov solution".into()));
    }
    Ok((x + x.transpose()) * 0.5)
}

fn relative(residual: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        residual / scale
    } else {
        residual
    }
}

/// `‖Aσ + σAᵀ + D‖ / (2‖Aσ‖ + ‖D‖)`.
pub fn lyapunov_residual(a: &Mat4, d: &Mat4, sigma: &Mat4) -> f64 {
    let a_s = a * sigma;
    relative(
        (a_s + a_s.transpose() + d).norm(),
        2.0 * a_s.norm() + d.norm(),
    )
}

/// `‖Ãσ + σÃᵀ − σBᵀBσ + D̃‖ / (2‖Ãσ‖ + ‖σBᵀBσ‖ + ‖D̃‖)`.
pub fn riccati_residual(cm: &ConditionalMatrices, sigma: &Mat4) -> f64 {
    let scale = 2.0 * (cm.a_tilde * sigma).norm()
        + (sigma * cm.information() * sigma).norm()
        + cm.d_tilde.norm();
    relative(cm.riccati_rhs(sigma).norm(), scale)
}

/// Unconditional steady state `Aσ + σAᵀ + D = 0`; refuses non-Hurwitz drifts.
pub fn solve_lyapunov(a: &Mat4, d: &Mat4) -> Result<SteadyState> {
    let verdict = is_hurwitz(a)?;
    if !verdict.is_stable {
        return Err(Error::Stability(format!(
            "drift is not Hurwitz (spectral abscissa {:.3e})",
            verdict.spectral_abscissa
        )));
    }
    let sigma = lyapunov_kron(a, d)?;
    let residual = lyapunov_residual(a, d, &sigma);
    if !(residual < STEADY_STATE_TOL) {
        return Err(Error::Numerical(format!(
            "Lyapunov residual {residual:.3e} above tolerance"
        )));
    }
    Ok(SteadyState {
        sigma,
        residual,
        effort: SolverEffort::Direct,
    })
}

/// Newton–Kleinman iterations from a stabilising `sigma`.
fn newton_polish(cm: &ConditionalMatrices, mut sigma: Mat4) -> Option<(Mat4, usize)> {
    let q = cm.information();
    let mut res = riccati_residual(cm, &sigma);
    let mut steps = 0;
    while steps < MAX_NEWTON_STEPS {
        if res < 1e-14 {
            break;
        }
        let closed = cm.a_tilde - sigma * q;
        let next = lyapunov_kron(&closed, &(sigma * q * sigma + cm.d_tilde)).ok()?;
        let next_res = riccati_residual(cm, &next);
        steps += 1;
        if !(next_res < res) {
            break;
        }
        sigma = next;
        res = next_res;
    }
    (res < STEADY_STATE_TOL).then_some((sigma, steps))
}

fn accept(cm: &ConditionalMatrices, sigma: &Mat4) -> bool {
    let closed = cm.a_tilde - sigma * cm.information();
    matches!(is_hurwitz(&closed), Ok(v) if v.is_stable) && is_physical(sigma)
}

/// Conditional steady state `Ãσ + σÃᵀ − σBᵀBσ + D̃ = 0`.
///
/// Integrates the Riccati flow from the vacuum until it settles, then polishes
/// with Newton steps. The returned solution is the stabilising one: the
/// closed-loop matrix `Ã − σBᵀB` is Hurwitz.
pub fn solve_riccati(cm: &ConditionalMatrices) -> Result<SteadyState> {
    if !is_detectable(&cm.b, &cm.a_tilde)? {
        return Err(Error::Stability(
            "(B, Ã) is not detectable: no stabilising Riccati solution".into(),
        ));
    }
    let rate_scale = (cm.a_tilde.norm() + cm.information().norm()).max(1e-12);
    let mut flow = Dopri5::new(
        |s: &Mat4| cm.riccati_rhs(s),
        Mat4::identity(),
        0.1 / rate_scale,
    );

    for tol in FLOW_TOLERANCES {
        while riccati_residual(cm, &flow.y) >= tol {
            if flow.accepted >= MAX_FLOW_STEPS || flow.t >= MAX_FLOW_TIME {
                return Err(Error::Numerical(format!(
                    "Riccati flow did not settle (t = {:.3e}, {} steps)",
                    flow.t, flow.accepted
                )));
            }
            if !flow.step() {
                return Err(Error::Numerical(format!(
                    "Riccati flow step size collapsed at t = {:.3e}",
                    flow.t
                )));
            }
        }
        let start = (flow.y + flow.y.transpose()) * 0.5;
        if let Some((sigma, newton_steps)) = newton_polish(cm, start) {
            if accept(cm, &sigma) {
                return Ok(SteadyState {
                    sigma,
                    residual: riccati_residual(cm, &sigma),
                    effort: SolverEffort::RiccatiFlow {
                        flow_time: flow.t,
                        flow_steps: flow.accepted,
                        newton_steps,
                    },
                });
            }
        }
    }
    Err(Error::Numerical(format!(
        "Riccati refinement failed (min eig of σ+iΩ = {:.3e})",
        min_uncertainty_eigenvalue(&flow.y)
    )))
}

/// Like [`solve_riccati`], but starts Newton from `guess` when it is
/// stabilising for these matrices. Falls back to the full flow otherwise.
pub fn solve_riccati_warm(cm: &ConditionalMatrices, guess: &Mat4) -> Result<SteadyState> {
    let closed = cm.a_tilde - guess * cm.information();
    if matches!(is_hurwitz(&closed), Ok(v) if v.is_stable) {
        if let Some((sigma, newton_steps)) = newton_polish(cm, *guess) {
            if accept(cm, &sigma) {
                return Ok(SteadyState {
                    sigma,
                    residual: riccati_residual(cm, &sigma),
                    effort: SolverEffort::WarmNewton { newton_steps },
                });
            }
        }
    }
    solve_riccati(cm)
}
