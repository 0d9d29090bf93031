//! Time evolution of the moments.
//!
//! The covariance follows a deterministic ODE (Lyapunov when unmonitored,
//! Riccati when monitored) and is stepped with explicit Euler. The first
//! moments follow the linear SDE
//!
//! ```text
//! dR = A R dt + (N − σBᵀ) dw / √2,      dw ~ Normal(0, dt·I₄)
//! ```
//!
//! stepped with Euler–Maruyama on the same grid. The `1/√2` matches the
//! covariance convention `σ = 2·Var`, so that at stationarity the conditional
//! covariance plus twice the spread of the means equals the unconditional
//! covariance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::f64::consts::FRAC_1_SQRT_2;

use super::feedback::feedback_gain;
use super::steady::solve_riccati;
use crate::error::{Error, Result};
use crate::matrices::{build_conditional, ConditionalMatrices};
use crate::model::{
    validate, GaussianState, Mat4, MeasurementParams, SymplecticForm, SystemParams, Vec4,
};

/// Values beyond this magnitude are treated as a blown-up integration.
const BLOWUP: f64 = 1e150;

/// Fixed-step time grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t_final: f64,
    pub dt: f64,
    /// Record every `stride`-th step (the final step is always recorded).
    pub stride: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, dt: f64) -> Self {
        Self {
            t_final,
            dt,
            stride: 1,
        }
    }

    pub fn with_stride(self, stride: usize) -> Self {
        Self { stride, ..self }
    }

    /// Default step `10⁻³·2π/ω_m`.
    pub fn default_dt(omega_m: f64) -> f64 {
        1e-3 * std::f64::consts::TAU / omega_m
    }

    pub fn steps(&self) -> Result<usize> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Domain(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_final.is_finite() && self.t_final >= self.dt) {
            return Err(Error::Domain(format!(
                "t_final must be at least dt, got t_final={} dt={}",
                self.t_final, self.dt
            )));
        }
        if self.stride == 0 {
            return Err(Error::Domain("record stride must be positive".into()));
        }
        Ok((self.t_final / self.dt).round().max(1.0) as usize)
    }

    fn records(&self, step: usize, last: usize) -> bool {
        step.is_multiple_of(self.stride) || step == last
    }
}

/// Identifies the random stream of one trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoiseSeed {
    pub seed: u64,
    pub stream: u64,
}

impl NoiseSeed {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub r_means: Vec<Vec4>,
    pub sigma_path: Option<Vec<Mat4>>,
    pub noise_seed: Option<NoiseSeed>,
    pub feedback_enabled: bool,
}

impl TrajectoryRecord {
    pub fn final_mean(&self) -> &Vec4 {
        self.r_means
            .last()
            .expect("trajectory records at least one point")
    }

    pub fn final_sigma(&self) -> Option<&Mat4> {
        self.sigma_path.as_ref().and_then(|p| p.last())
    }
}

fn blown_up(m: impl IntoIterator<Item = f64>) -> bool {
    m.into_iter().any(|v| !v.is_finite() || v.abs() > BLOWUP)
}

fn instability(t: f64, dt: f64) -> Error {
    Error::Numerical(format!(
        "explicit step diverged at t = {t:.4e}; retry with dt below {:.3e}",
        dt / 4.0
    ))
}

fn prepare(params: &SystemParams, meas: Option<&MeasurementParams>) -> Result<ConditionalMatrices> {
    let meas = meas.copied().unwrap_or_else(MeasurementParams::unmonitored);
    let (params, meas) = validate(*params, meas)?;
    Ok(build_conditional(&params, &meas))
}

/// Covariance path on the grid, every step (not strided).
fn covariance_path(
    cm: &ConditionalMatrices,
    sigma0: &Mat4,
    dt: f64,
    steps: usize,
) -> Result<Vec<Mat4>> {
    let mut path = Vec::with_capacity(steps + 1);
    let mut sigma = *sigma0;
    path.push(sigma);
    for k in 0..steps {
        sigma += cm.riccati_rhs(&sigma) * dt;
        if blown_up(sigma.iter().copied()) {
            return Err(instability((k + 1) as f64 * dt, dt));
        }
        path.push(sigma);
    }
    Ok(path)
}

/// Deterministic evolution of `σ(t)` and of the mean `R(t)` under `dR = A R dt`.
///
/// With `meas = None` (or zero efficiencies) the covariance follows the
/// Lyapunov equation, otherwise the Riccati equation.
pub fn integrate_moments(
    initial: &GaussianState,
    params: &SystemParams,
    meas: Option<&MeasurementParams>,
    grid: &TimeGrid,
) -> Result<TrajectoryRecord> {
    let cm = prepare(params, meas)?;
    let steps = grid.steps()?;
    let dt = grid.dt;

    let mut sigma = *initial.sigma();
    let mut r = *initial.r_mean();
    let mut times = vec![0.0];
    let mut r_means = vec![r];
    let mut sigmas = vec![sigma];
    for k in 1..=steps {
        sigma += cm.riccati_rhs(&sigma) * dt;
        r += cm.a * r * dt;
        if blown_up(sigma.iter().chain(r.iter()).copied()) {
            return Err(instability(k as f64 * dt, dt));
        }
        if grid.records(k, steps) {
            times.push(k as f64 * dt);
            r_means.push(r);
            sigmas.push(sigma);
        }
    }
    Ok(TrajectoryRecord {
        times,
        r_means,
        sigma_path: Some(sigmas),
        noise_seed: None,
        feedback_enabled: false,
    })
}

/// Everything shared by the trajectories of one ensemble.
struct Propagator {
    drift: Mat4,
    /// Noise coupling per step, `(N − σ_k Bᵀ − M_ss)/√2` with feedback on.
    noise: Vec<Mat4>,
    feedback: bool,
    dt: f64,
    steps: usize,
}

impl Propagator {
    fn new(
        initial: &GaussianState,
        params: &SystemParams,
        meas: &MeasurementParams,
        grid: &TimeGrid,
        feedback: bool,
    ) -> Result<Self> {
        let cm = prepare(params, Some(meas))?;
        let steps = grid.steps()?;
        let path = covariance_path(&cm, initial.sigma(), grid.dt, steps)?;
        let (drift, offset) = if feedback {
            let ss = solve_riccati(&cm)?;
            let sym = SymplecticForm::new();
            let gain = feedback_gain(&ss.sigma, &cm, &sym)?;
            // Ω F = −M_ss: the feedback injects −M_ss dw/√2 and −ΩFB R dt
            (gain.closed_loop_drift, sym.matrix() * gain.f_map)
        } else {
            (cm.a, Mat4::zeros())
        };
        let noise = path[..steps]
            .iter()
            .map(|s| (cm.innovation_gain(s) + offset) * FRAC_1_SQRT_2)
            .collect();
        Ok(Self {
            drift,
            noise,
            feedback,
            dt: grid.dt,
            steps,
        })
    }

    fn run(&self, r0: Vec4, seed: NoiseSeed, mut record: impl FnMut(usize, &Vec4)) -> Result<Vec4> {
        let mut rng = seed.rng();
        let sqrt_dt = self.dt.sqrt();
        let mut r = r0;
        record(0, &r);
        for k in 0..self.steps {
            let dw = Vec4::from_fn(|_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * sqrt_dt
            });
            r += self.drift * r * self.dt + self.noise[k] * dw;
            if blown_up(r.iter().copied()) {
                return Err(instability((k + 1) as f64 * self.dt, self.dt));
            }
            record(k + 1, &r);
        }
        Ok(r)
    }
}

/// One Euler–Maruyama realisation of the conditional first moments.
///
/// With `feedback` on, the gain is computed at the Riccati steady state and
/// applied for the whole run; the noise cancels exactly once `σ(t)` sits at
/// that steady state.
pub fn simulate_trajectory(
    initial: &GaussianState,
    params: &SystemParams,
    meas: &MeasurementParams,
    grid: &TimeGrid,
    seed: NoiseSeed,
    feedback: bool,
) -> Result<TrajectoryRecord> {
    let prop = Propagator::new(initial, params, meas, grid, feedback)?;
    let mut times = Vec::new();
    let mut r_means = Vec::new();
    prop.run(*initial.r_mean(), seed, |k, r| {
        if grid.records(k, prop.steps) {
            times.push(k as f64 * prop.dt);
            r_means.push(*r);
        }
    })?;
    Ok(TrajectoryRecord {
        times,
        r_means,
        sigma_path: None,
        noise_seed: Some(seed),
        feedback_enabled: prop.feedback,
    })
}

/// Final first moments of `count` independent trajectories.
///
/// Trajectory `i` uses stream `i` of `seed`; the output is ordered by index
/// and does not depend on thread scheduling.
pub fn simulate_ensemble(
    initial: &GaussianState,
    params: &SystemParams,
    meas: &MeasurementParams,
    grid: &TimeGrid,
    seed: u64,
    count: usize,
    feedback: bool,
) -> Result<Vec<Vec4>> {
    let prop = Propagator::new(initial, params, meas, grid, feedback)?;
    (0..count as u64)
        .into_par_iter()
        .map(|stream| prop.run(*initial.r_mean(), NoiseSeed { seed, stream }, |_, _| {}))
        .collect()
}
