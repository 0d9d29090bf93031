//! Command dispatch: resolved config in, result table out.

use std::f64::consts::TAU;

use levsim::experiment::{calibrate, calibrate_coupling};
use levsim::matrices::{build_conditional, build_unconditional};
use levsim::merit::summarize;
use levsim::model::thermal_state;
use levsim::solvers::{
    integrate_moments, simulate_ensemble, simulate_trajectory, solve_lyapunov, solve_riccati,
    NoiseSeed, SteadyState, TimeGrid,
};
use levsim::stability::{is_detectable, is_hurwitz};
use levsim::sweep::{
    decoupled_curves, detuning_sweep, linspace, stability_scan, SweepRow, SweepSpec, SweepSystem,
};
use levsim::{Error, Mat4, MeasurementParams, SystemParams, Vec4};

use crate::config::{Command, RunConfig, TrajectoryMode};
use crate::output::{format_number, Cell, Table};

const QUADRATURES: [&str; 4] = ["x_c", "p_c", "x_m", "p_m"];

pub fn execute(config: &RunConfig) -> Result<Table, Error> {
    match config.command {
        Command::StabilityMap => stability_map(config),
        Command::SteadyState => steady_state(config),
        Command::Sweep => sweep(config, false),
        Command::ExperimentSweep => sweep(config, true),
        Command::Decoupled => decoupled(config),
        Command::Trajectory => trajectory(config),
    }
}

fn system(config: &RunConfig) -> Result<SystemParams, Error> {
    let s = &config.system;
    let p = SystemParams::dimensionless(1.0, s.delta, s.g, s.kappa, s.gamma);
    p.check()?;
    Ok(p)
}

fn measurement(config: &RunConfig) -> Result<MeasurementParams, Error> {
    let m = &config.measurement;
    MeasurementParams::new(m.eta1, m.eta2, m.phi).normalized()
}

fn deltas(config: &RunConfig) -> Result<Vec<f64>, Error> {
    let g = &config.grid;
    if g.points == 0 || !(g.delta_min.is_finite() && g.delta_max.is_finite()) {
        return Err(Error::Domain(
            "detuning grid needs finite bounds and at least one point".into(),
        ));
    }
    Ok(linspace(g.delta_min, g.delta_max, g.points))
}

/// Rows are couplings, columns detunings; cells are 1 for Hurwitz-stable drift.
fn stability_map(config: &RunConfig) -> Result<Table, Error> {
    let s = &config.stability;
    if s.g_points == 0 {
        return Err(Error::Domain(
            "coupling grid needs at least one point".into(),
        ));
    }
    let gs = linspace(s.g_min, s.g_max, s.g_points);
    let ds = deltas(config)?;
    let map = stability_scan(&ds, &gs, config.system.kappa, config.system.gamma)?;
    let mut table = Table::new(
        std::iter::once("g".to_string())
            .chain(ds.iter().map(|d| format_number(*d, config.precision))),
    );
    for (j, g) in gs.iter().enumerate() {
        let mut row = vec![Cell::from(*g)];
        row.extend(map.stable.iter().map(|col| Cell::Flag(Some(col[j]))));
        table.push(row);
    }
    Ok(table)
}

fn covariance_columns() -> Vec<String> {
    let mut cols = Vec::new();
    for i in 0..4 {
        for j in i..4 {
            cols.push(format!("s{}{}", i + 1, j + 1));
        }
    }
    cols
}

fn covariance_cells(sigma: Option<&Mat4>) -> Vec<Cell> {
    let mut cells = Vec::new();
    for i in 0..4 {
        for j in i..4 {
            cells.push(Cell::from(sigma.map(|s| s[(i, j)])));
        }
    }
    cells
}

fn steady_row(
    kind: &str,
    stable: bool,
    detectable: Option<bool>,
    solved: Result<SteadyState, Error>,
) -> Result<Vec<Cell>, Error> {
    let mut row = vec![
        Cell::Text(Some(kind.into())),
        Cell::from(stable),
        Cell::Flag(detectable),
    ];
    match solved {
        Ok(ss) => {
            let m = summarize(&ss.sigma)?;
            row.extend([m.n_ph, m.purity, m.xi, m.xi_db, ss.residual].map(Cell::from));
            row.extend(covariance_cells(Some(&ss.sigma)));
            row.push(Cell::Text(None));
        }
        Err(e) => {
            row.extend((0..5).map(|_| Cell::Num(None)));
            row.extend(covariance_cells(None));
            row.push(Cell::Text(Some(e.to_string())));
        }
    }
    Ok(row)
}

/// Unconditional and, when monitored, conditional steady state at one point.
fn steady_state(config: &RunConfig) -> Result<Table, Error> {
    let p = system(config)?;
    let meas = measurement(config)?;
    let mut columns: Vec<String> = [
        "kind",
        "stable",
        "detectable",
        "n_ph",
        "purity",
        "xi",
        "xi_db",
        "residual",
    ]
    .map(String::from)
    .to_vec();
    columns.extend(covariance_columns());
    columns.push("note".into());
    let mut table = Table::new(columns);

    let um = build_unconditional(&p);
    let stable = is_hurwitz(&um.a)?.is_stable;
    let lyap = solve_lyapunov(&um.a, &um.d);
    let mut any = lyap.is_ok();
    table.push(steady_row("unconditional", stable, None, lyap)?);
    if meas.is_monitored() {
        let cm = build_conditional(&p, &meas);
        let detectable = is_detectable(&cm.b, &cm.a_tilde)?;
        let ric = solve_riccati(&cm);
        any |= ric.is_ok();
        table.push(steady_row("conditional", stable, Some(detectable), ric)?);
    }
    if !any {
        return Err(Error::Stability(
            "no steady state exists at this point".into(),
        ));
    }
    Ok(table)
}

fn sweep(config: &RunConfig, experiment: bool) -> Result<Table, Error> {
    let system = if experiment {
        let e = &config.experiment;
        let omega_m0 = TAU * e.trap_frequency_hz;
        let setup = match e.coupling_hz {
            Some(g0) => calibrate_coupling(&e.setup, omega_m0, TAU * g0)?,
            None => calibrate(&e.setup, omega_m0)?,
        };
        SweepSystem::Experiment(setup)
    } else {
        SweepSystem::Dimensionless(system(config)?)
    };
    let spec = SweepSpec {
        deltas: deltas(config)?,
        scenario: config.sweep.scenario,
        efficiencies: config
            .sweep
            .efficiencies
            .iter()
            .map(|e| (e[0], e[1]))
            .collect(),
        objective: config.sweep.objective,
        system,
    };
    let rows = detuning_sweep(&spec)?;
    let mut columns = vec!["delta", "eta1", "eta2"];
    if experiment {
        columns.push("omega_m");
    }
    columns.extend(["phi_opt", "n_ph", "purity", "xi", "xi_db"]);
    if experiment {
        columns.extend(["delta_x", "delta_x_vacuum"]);
    }
    columns.extend(["stable", "detectable", "note"]);
    let mut table = Table::new(columns);
    for r in rows {
        table.push(sweep_cells(&r, experiment));
    }
    Ok(table)
}

fn sweep_cells(r: &SweepRow, experiment: bool) -> Vec<Cell> {
    let mut row = vec![Cell::from(r.delta), Cell::from(r.eta1), Cell::from(r.eta2)];
    if experiment {
        row.push(Cell::from(r.omega_m));
    }
    row.extend([r.phi_opt, r.n_ph, r.purity, r.xi, r.xi_db].map(Cell::from));
    if experiment {
        row.extend([r.delta_x, r.delta_x_vacuum].map(Cell::from));
    }
    row.extend([
        Cell::from(r.stable),
        Cell::from(r.detectable),
        Cell::Text(r.note.clone()),
    ]);
    row
}

fn decoupled(config: &RunConfig) -> Result<Table, Error> {
    let d = &config.decoupled;
    if d.gamma_points == 0 || d.eta2.is_empty() {
        return Err(Error::Domain(
            "decoupled table needs Gamma points and eta2 values".into(),
        ));
    }
    let rows = decoupled_curves(&linspace(d.gamma_min, d.gamma_max, d.gamma_points), &d.eta2)?;
    let mut table = Table::new(["gamma", "eta2", "n_ph", "purity", "xi", "xi_db"]);
    for r in rows {
        table.push(
            [r.gamma_ratio, r.eta2, r.n_ph, r.purity, r.xi, r.xi_db]
                .map(Cell::from)
                .to_vec(),
        );
    }
    Ok(table)
}

fn trajectory(config: &RunConfig) -> Result<Table, Error> {
    let t = &config.trajectory;
    let p = system(config)?;
    let meas = measurement(config)?;
    let grid = TimeGrid::new(
        t.t_final,
        t.dt.unwrap_or_else(|| TimeGrid::default_dt(p.omega_m)),
    )
    .with_stride(t.stride);
    let initial = thermal_state(t.n_cavity, t.n_mech)?.with_mean(Vec4::from(t.r0));
    let mean_cells = |r: &Vec4| r.iter().map(|x| Cell::from(*x)).collect::<Vec<_>>();
    match t.mode {
        TrajectoryMode::Moments => {
            let rec = integrate_moments(&initial, &p, Some(&meas), &grid)?;
            let mut table = Table::new(
                ["t"]
                    .into_iter()
                    .chain(QUADRATURES)
                    .chain(["n_ph", "purity", "xi_db"]),
            );
            let sigmas = rec.sigma_path.as_deref().unwrap_or_default();
            for ((time, r), s) in rec.times.iter().zip(&rec.r_means).zip(sigmas) {
                // a diverging covariance loses its positivity to rounding first
                let m =
                    summarize(s).map_err(|e| Error::Numerical(format!("at t = {time}: {e}")))?;
                let mut row = vec![Cell::from(*time)];
                row.extend(mean_cells(r));
                row.extend([m.n_ph, m.purity, m.xi_db].map(Cell::from));
                table.push(row);
            }
            Ok(table)
        }
        TrajectoryMode::Stochastic => {
            let rec = simulate_trajectory(
                &initial,
                &p,
                &meas,
                &grid,
                NoiseSeed::new(config.seed),
                t.feedback,
            )?;
            let mut table = Table::new(["t"].into_iter().chain(QUADRATURES));
            for (time, r) in rec.times.iter().zip(&rec.r_means) {
                let mut row = vec![Cell::from(*time)];
                row.extend(mean_cells(r));
                table.push(row);
            }
            Ok(table)
        }
        TrajectoryMode::Ensemble => {
            let finals = simulate_ensemble(
                &initial,
                &p,
                &meas,
                &grid,
                config.seed,
                t.trajectories,
                t.feedback,
            )?;
            let mut table = Table::new(["trajectory"].into_iter().chain(QUADRATURES));
            for (i, r) in finals.iter().enumerate() {
                let mut row = vec![Cell::Int(i as u64)];
                row.extend(mean_cells(r));
                table.push(row);
            }
            Ok(table)
        }
    }
}
