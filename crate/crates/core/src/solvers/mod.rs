//! Steady-state solvers, feedback design and time integration.

mod dynamics;
mod feedback;
mod ode;
mod steady;

pub use dynamics::{
    integrate_moments, simulate_ensemble, simulate_trajectory, NoiseSeed, TimeGrid,
    TrajectoryRecord,
};
pub use feedback::{feedback_gain, FeedbackGain};
pub use steady::{
    lyapunov_residual, riccati_residual, solve_lyapunov, solve_riccati, solve_riccati_warm,
    SolverEffort, SteadyState, STEADY_STATE_TOL,
};
