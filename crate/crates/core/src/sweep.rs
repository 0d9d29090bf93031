//! Detuning sweeps, homodyne-phase optimisation and stability scans.
//!
//! Two modes never mix. In dimensionless mode the coupling is held fixed while
//! `Δ` varies. In experiment mode every grid point gets its own operating point
//! (`ω_m`, `g`, `Γ` all follow the photon number) and the axis is in units of
//! the resonant trap frequency `ω_m0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::experiment::{operating_point, reference_frequency, ExperimentConfig};
use crate::matrices::build_conditional;
use crate::merit::{self, position_uncertainty, HBAR};
use crate::model::{reduce_phase, Mat2, Mat4, MeasurementParams, SystemParams, UnitSystem};
use crate::solvers::{solve_lyapunov, solve_riccati, solve_riccati_warm, SteadyState};
use crate::stability::{is_detectable, is_hurwitz, stability_map, StabilityMap};

/// Points of the coarse phase scan over `[0, π)`.
pub const PHASE_GRID_POINTS: usize = 64;
/// Bracket width at which golden-section refinement stops (rad).
pub const PHASE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Unconditional,
    CavityHomodyne,
    PositionOnly,
    Both,
}

/// Figure of merit the homodyne phase is chosen for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    NPh,
    Purity,
    Squeezing,
    DeltaX,
    /// Optimise separately for every reported figure of merit.
    Each,
}

impl Objective {
    /// Quantity to minimise for a single objective.
    fn cost(self, sigma: &Mat4) -> Result<f64> {
        let m = merit::reduce_mechanical(sigma);
        match self {
            Objective::NPh => Ok(merit::phonon_number(&m)),
            Objective::Purity => Ok(-merit::purity(&m)?),
            Objective::Squeezing => Ok(merit::squeezing(&m).xi),
            // the length scale is fixed at a given operating point
            Objective::DeltaX => Ok(m[(0, 0)]),
            Objective::Each => Err(Error::Domain(
                "a single phase needs a single objective".into(),
            )),
        }
    }

    fn value(self, cost: f64) -> f64 {
        if self == Objective::Purity {
            -cost
        } else {
            cost
        }
    }
}

/// Source of the parameters at each grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepSystem {
    /// Fixed template; `delta` is replaced by each grid value (units of `ω_m`).
    Dimensionless(SystemParams),
    /// Calibrated setup; grid values are in units of `ω_m0`.
    Experiment(ExperimentConfig),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisUnit {
    OmegaM,
    OmegaM0,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub deltas: Vec<f64>,
    pub scenario: Scenario,
    /// `(η₁, η₂)` pairs, one output curve each.
    pub efficiencies: Vec<(f64, f64)>,
    pub objective: Objective,
    pub system: SweepSystem,
}

impl SweepSpec {
    pub fn axis_unit(&self) -> AxisUnit {
        match self.system {
            SweepSystem::Dimensionless(_) => AxisUnit::OmegaM,
            SweepSystem::Experiment(_) => AxisUnit::OmegaM0,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.deltas.is_empty() {
            return Err(Error::Domain("detuning grid is empty".into()));
        }
        if self.deltas.iter().any(|d| !d.is_finite()) {
            return Err(Error::Domain("detuning grid has non-finite values".into()));
        }
        if self.deltas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain(
                "detuning grid must be strictly increasing".into(),
            ));
        }
        if self.efficiencies.is_empty() {
            return Err(Error::Domain("no efficiency curves given".into()));
        }
        for &(eta1, eta2) in &self.efficiencies {
            MeasurementParams::new(eta1, eta2, 0.0).normalized()?;
            let ok = match self.scenario {
                Scenario::Unconditional => eta1 == 0.0 && eta2 == 0.0,
                Scenario::CavityHomodyne => eta2 == 0.0,
                Scenario::PositionOnly => eta1 == 0.0,
                Scenario::Both => true,
            };
            if !ok {
                return Err(Error::Domain(format!(
                    "efficiencies ({eta1}, {eta2}) are inconsistent with scenario {:?}",
                    self.scenario
                )));
            }
        }
        match &self.system {
            SweepSystem::Dimensionless(p) => {
                p.check()?;
                if p.units != UnitSystem::Dimensionless {
                    return Err(Error::Units("sweep template must be dimensionless".into()));
                }
            }
            SweepSystem::Experiment(c) => c.check()?,
        }
        Ok(())
    }
}

/// One grid point of one efficiency curve. Missing values are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Detuning in axis units.
    pub delta: f64,
    pub eta1: f64,
    pub eta2: f64,
    /// Local trap frequency in axis units.
    pub omega_m: f64,
    /// Phase minimising `n_ph` (or the chosen objective); `None` when irrelevant.
    pub phi_opt: Option<f64>,
    pub n_ph: Option<f64>,
    pub purity: Option<f64>,
    pub xi: Option<f64>,
    pub xi_db: Option<f64>,
    /// Position uncertainty in meters (experiment mode).
    pub delta_x: Option<f64>,
    /// Ground-state position uncertainty of the local trap (experiment mode).
    pub delta_x_vacuum: Option<f64>,
    pub stable: bool,
    pub detectable: bool,
    /// Why values are missing, if they are.
    pub note: Option<String>,
}

impl SweepRow {
    fn empty(delta: f64, eta1: f64, eta2: f64, omega_m: f64) -> Self {
        Self {
            delta,
            eta1,
            eta2,
            omega_m,
            phi_opt: None,
            n_ph: None,
            purity: None,
            xi: None,
            xi_db: None,
            delta_x: None,
            delta_x_vacuum: None,
            stable: false,
            detectable: false,
            note: None,
        }
    }
}

/// Result of a homodyne-phase optimisation.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseOptimum {
    /// Optimal phase in `[0, π)`; `0` when the phase is irrelevant.
    pub phi: f64,
    /// Objective at `phi` (purity as a value to maximise, the rest to minimise).
    pub value: f64,
    pub steady: SteadyState,
    /// `false` when `η₁ = 0` and the phase has no effect.
    pub phase_relevant: bool,
}

struct PhaseProblem<'a> {
    params: &'a SystemParams,
    template: &'a MeasurementParams,
    objective: Objective,
}

impl PhaseProblem<'_> {
    fn solve(&self, phi: f64, guess: Option<&Mat4>) -> Result<(f64, SteadyState)> {
        let cm = build_conditional(self.params, &self.template.with_phi(reduce_phase(phi)));
        let steady = match guess {
            Some(g) => solve_riccati_warm(&cm, g)?,
            None => solve_riccati(&cm)?,
        };
        Ok((self.objective.cost(&steady.sigma)?, steady))
    }
}

/// Chooses `φ ∈ [0, π)` optimising `objective` for the conditional steady state.
///
/// A uniform scan of [`PHASE_GRID_POINTS`] phases is refined by golden-section
/// search around the best scan point until the bracket is below [`PHASE_TOL`].
pub fn optimize_phase(
    params: &SystemParams,
    meas_template: &MeasurementParams,
    objective: Objective,
) -> Result<PhaseOptimum> {
    let meas = meas_template.normalized()?;
    params.check()?;
    let problem = PhaseProblem {
        params,
        template: &meas,
        objective,
    };
    if meas.eta1 == 0.0 {
        let (cost, steady) = problem.solve(0.0, None)?;
        return Ok(PhaseOptimum {
            phi: 0.0,
            value: objective.value(cost),
            steady,
            phase_relevant: false,
        });
    }

    let step = PI / PHASE_GRID_POINTS as f64;
    let mut best: Option<(usize, f64, SteadyState)> = None;
    let mut guess: Option<Mat4> = None;
    let mut last_err = None;
    for i in 0..PHASE_GRID_POINTS {
        match problem.solve(i as f64 * step, guess.as_ref()) {
            Ok((cost, steady)) => {
                guess = Some(steady.sigma);
                if best.as_ref().is_none_or(|b| cost < b.1) {
                    best = Some((i, cost, steady));
                }
            }
            Err(e) => {
                guess = None;
                last_err = Some(e);
            }
        }
    }
    let (i_best, mut best_cost, mut best_steady) = best.ok_or_else(|| {
        last_err.unwrap_or_else(|| Error::Numerical("phase scan produced no solution".into()))
    })?;
    let mut best_phi = i_best as f64 * step;

    // golden section on [φ_i − step, φ_i + step], periodic in π
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (best_phi - step, best_phi + step);
    let mut warm = best_steady.sigma;
    let mut eval = |phi: f64, warm: &mut Mat4| -> f64 {
        match problem.solve(phi, Some(warm)) {
            Ok((cost, steady)) => {
                *warm = steady.sigma;
                if cost < best_cost {
                    best_cost = cost;
                    best_phi = phi;
                    best_steady = steady;
                }
                cost
            }
            Err(_) => f64::INFINITY,
        }
    };
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = eval(c, &mut warm);
    let mut fd = eval(d, &mut warm);
    while b - a > PHASE_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c, &mut warm);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d, &mut warm);
        }
    }
    Ok(PhaseOptimum {
        phi: reduce_phase(best_phi),
        value: objective.value(best_cost),
        steady: best_steady,
        phase_relevant: true,
    })
}

/// `n_c`-dependent length scale of one experiment grid point.
#[derive(Clone, Copy)]
struct LengthScale {
    mass: f64,
    omega_m: f64,
}

fn fill_merits(
    row: &mut SweepRow,
    sigma_for: impl Fn(Objective) -> Mat4,
    scale: Option<LengthScale>,
) -> Result<()> {
    let m_n = merit::reduce_mechanical(&sigma_for(Objective::NPh));
    let m_p = merit::reduce_mechanical(&sigma_for(Objective::Purity));
    let m_s = merit::reduce_mechanical(&sigma_for(Objective::Squeezing));
    let sq = merit::squeezing(&m_s);
    row.n_ph = Some(merit::phonon_number(&m_n));
    row.purity = Some(merit::purity(&m_p)?);
    row.xi = Some(sq.xi);
    row.xi_db = Some(sq.xi_db);
    if let Some(s) = scale {
        let m_x: Mat2 = merit::reduce_mechanical(&sigma_for(Objective::DeltaX));
        let dx = position_uncertainty(&m_x, s.mass, s.omega_m, HBAR)?;
        row.delta_x = Some(dx.delta_x);
        row.delta_x_vacuum = Some(dx.vacuum_threshold);
    }
    Ok(())
}

fn evaluate_point(
    row: &mut SweepRow,
    params: &SystemParams,
    meas: MeasurementParams,
    objective: Objective,
    scale: Option<LengthScale>,
) -> Result<()> {
    let cm = build_conditional(params, &meas);
    row.stable = is_hurwitz(&cm.a)?.is_stable;

    if !meas.is_monitored() {
        row.detectable = row.stable;
        if !row.stable {
            row.note = Some("unstable drift: no steady state".into());
            return Ok(());
        }
        let sigma = solve_lyapunov(&cm.a, &cm.d)?.sigma;
        return fill_merits(row, |_| sigma, scale);
    }

    if meas.eta1 == 0.0 {
        row.detectable = is_detectable(&cm.b, &cm.a_tilde)?;
        if !row.detectable {
            row.note = Some("not detectable: no stabilising solution".into());
            return Ok(());
        }
        let sigma = solve_riccati(&cm)?.sigma;
        return fill_merits(row, |_| sigma, scale);
    }

    let objectives = match objective {
        Objective::Each => vec![
            Objective::NPh,
            Objective::Purity,
            Objective::Squeezing,
            Objective::DeltaX,
        ],
        single => vec![single],
    };
    let optima = objectives
        .iter()
        .map(|&o| optimize_phase(params, &meas, o).map(|opt| (o, opt)))
        .collect::<Result<Vec<_>>>()?;
    let primary = &optima[0].1;
    row.phi_opt = Some(primary.phi);
    let cm_opt = build_conditional(params, &meas.with_phi(primary.phi));
    row.detectable = is_detectable(&cm_opt.b, &cm_opt.a_tilde)?;
    let sigma_for = |o: Objective| {
        optima
            .iter()
            .find(|(k, _)| *k == o)
            .map_or(primary.steady.sigma, |(_, opt)| opt.steady.sigma)
    };
    fill_merits(row, sigma_for, scale)
}

/// Evaluates every (efficiency curve, grid point) pair. Rows are ordered by
/// curve, then by detuning. Failures at single points are recorded in the
/// row's `note` and never abort the sweep.
pub fn detuning_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.check()?;
    let omega_ref = match &spec.system {
        SweepSystem::Dimensionless(_) => 1.0,
        SweepSystem::Experiment(c) => reference_frequency(c)?,
    };
    let jobs: Vec<(f64, f64, f64)> = spec
        .efficiencies
        .iter()
        .flat_map(|&(e1, e2)| spec.deltas.iter().map(move |&d| (e1, e2, d)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(eta1, eta2, delta)| {
            let point = match &spec.system {
                SweepSystem::Dimensionless(p) => Ok((p.with_delta(delta), None)),
                SweepSystem::Experiment(c) => {
                    operating_point(c, delta * omega_ref).and_then(|op| {
                        let scale = LengthScale {
                            mass: c.mass,
                            omega_m: op.params.omega_m,
                        };
                        Ok((op.params.to_dimensionless(omega_ref)?, Some(scale)))
                    })
                }
            };
            let (params, scale) = match point {
                Ok(p) => p,
                Err(e) => {
                    let mut row = SweepRow::empty(delta, eta1, eta2, f64::NAN);
                    row.note = Some(e.to_string());
                    return row;
                }
            };
            let mut row = SweepRow::empty(delta, eta1, eta2, params.omega_m);
            let meas = MeasurementParams::new(eta1, eta2, 0.0);
            if let Err(e) = evaluate_point(&mut row, &params, meas, spec.objective, scale) {
                let keep = (
                    row.delta,
                    row.eta1,
                    row.eta2,
                    row.omega_m,
                    row.stable,
                    row.detectable,
                );
                row = SweepRow::empty(keep.0, keep.1, keep.2, keep.3);
                row.stable = keep.4;
                row.detectable = keep.5;
                row.note = Some(e.to_string());
            }
            row
        })
        .collect();
    Ok(rows)
}

/// `n_points` evenly spaced values over `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, n_points: usize) -> Vec<f64> {
    match n_points {
        0 => Vec::new(),
        1 => vec![lo],
        n => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// 241 points over `[−6, 6]`.
pub fn default_detuning_grid() -> Vec<f64> {
    linspace(-6.0, 6.0, 241)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoupledRow {
    pub gamma_ratio: f64,
    pub eta2: f64,
    pub n_ph: f64,
    pub purity: f64,
    pub xi: f64,
    pub xi_db: f64,
}

/// Conditional mechanical covariance of an uncoupled oscillator (`g = 0`)
/// under position monitoring, in closed form.
pub fn decoupled_covariance(gamma_ratio: f64, eta2: f64) -> Result<Mat2> {
    if !(gamma_ratio.is_finite() && gamma_ratio > 0.0) {
        return Err(Error::Domain(format!(
            "decoupled limit needs Γ/ω_m > 0, got {gamma_ratio}"
        )));
    }
    if !(eta2 > 0.0 && eta2 <= 1.0) {
        return Err(Error::Domain(format!(
            "decoupled limit needs 0 < η₂ ≤ 1, got {eta2}"
        )));
    }
    let k = 4.0 * eta2 * gamma_ratio;
    let c = (-1.0 + (1.0 + 4.0 * k * gamma_ratio).sqrt()) / k;
    let a = (2.0 * c / k).sqrt();
    let b = a * (1.0 + k * c);
    Ok(Mat2::new(a, c, c, b))
}

/// Figures of merit of the decoupled oscillator on a `(Γ/ω_m) × η₂` grid,
/// ordered by `η₂`, then by `Γ/ω_m`.
pub fn decoupled_curves(gamma_ratios: &[f64], eta2s: &[f64]) -> Result<Vec<DecoupledRow>> {
    let mut rows = Vec::with_capacity(gamma_ratios.len() * eta2s.len());
    for &eta2 in eta2s {
        for &gamma_ratio in gamma_ratios {
            let m = decoupled_covariance(gamma_ratio, eta2)?;
            let sq = merit::squeezing(&m);
            rows.push(DecoupledRow {
                gamma_ratio,
                eta2,
                n_ph: merit::phonon_number(&m),
                purity: merit::purity(&m)?,
                xi: sq.xi,
                xi_db: sq.xi_db,
            });
        }
    }
    Ok(rows)
}

/// Hurwitz map over `(Δ, g)` in units of `ω_m`.
pub fn stability_scan(
    delta_grid: &[f64],
    g_grid: &[f64],
    kappa: f64,
    gamma: f64,
) -> Result<StabilityMap> {
    stability_map(delta_grid, g_grid, kappa, gamma, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_params() -> SystemParams {
        SystemParams::dimensionless(1.0, 0.0, 1.0, 2.0, 0.1)
    }

    #[test]
    fn grid_shape() {
        let g = default_detuning_grid();
        assert_eq!(g.len(), 241);
        assert_eq!(g[0], -6.0);
        assert_eq!(g[240], 6.0);
        assert_eq!(g[120], 0.0);
    }

    #[test]
    fn spec_validation() {
        let base = SweepSpec {
            deltas: vec![-1.0, 0.0],
            scenario: Scenario::PositionOnly,
            efficiencies: vec![(0.0, 0.5)],
            objective: Objective::NPh,
            system: SweepSystem::Dimensionless(reference_params()),
        };
        assert!(base.check().is_ok());
        let bad = SweepSpec {
            efficiencies: vec![(0.5, 0.5)],
            ..base.clone()
        };
        assert!(bad.check().is_err());
        let unsorted = SweepSpec {
            deltas: vec![0.0, -1.0],
            ..base.clone()
        };
        assert!(unsorted.check().is_err());
        let empty = SweepSpec {
            deltas: vec![],
            ..base
        };
        assert!(empty.check().is_err());
    }

    #[test]
    fn phase_irrelevant_without_cavity_homodyne() {
        let p = reference_params().with_delta(-2.0);
        let opt =
            optimize_phase(&p, &MeasurementParams::new(0.0, 0.5, 1.0), Objective::NPh).unwrap();
        assert!(!opt.phase_relevant);
        assert_eq!(opt.phi, 0.0);
    }

    #[test]
    fn optimum_beats_scan() {
        let p = reference_params().with_delta(-2.5);
        let meas = MeasurementParams::new(1.0, 0.0, 0.0);
        let opt = optimize_phase(&p, &meas, Objective::Squeezing).unwrap();
        for i in 0..16 {
            let cm = build_conditional(&p, &meas.with_phi(i as f64 * PI / 16.0));
            let s = solve_riccati(&cm).unwrap();
            let xi = merit::squeezing(&merit::reduce_mechanical(&s.sigma)).xi;
            assert!(opt.value <= xi + 1e-12);
        }
        assert!(opt.phi >= 0.0 && opt.phi < PI);
    }

    #[test]
    fn unconditional_rows_blank_when_unstable() {
        let spec = SweepSpec {
            deltas: vec![-5.0, 0.0, 1.0],
            scenario: Scenario::Unconditional,
            efficiencies: vec![(0.0, 0.0)],
            objective: Objective::NPh,
            system: SweepSystem::Dimensionless(reference_params()),
        };
        let rows = detuning_sweep(&spec).unwrap();
        assert!(rows[0].stable && rows[0].n_ph.is_some());
        for r in &rows[1..] {
            assert!(!r.stable);
            assert!(r.n_ph.is_none() && r.purity.is_none() && r.xi.is_none());
            assert!(r.note.is_some());
        }
    }

    #[test]
    fn decoupled_rejects_unmonitored() {
        assert!(decoupled_covariance(0.1, 0.0).is_err());
        assert!(decoupled_covariance(0.0, 1.0).is_err());
    }
}
