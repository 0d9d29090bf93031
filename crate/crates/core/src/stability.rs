//! Existence of steady states.
//!
//! The unconditional moment equations relax to a steady state iff the drift
//! is Hurwitz. The conditional Riccati equation has a stabilising solution iff
//! `(B, Ã)` is detectable: every eigenvector of `Ã` whose eigenvalue does not
//! strictly decay must be visible in the measurement output `B x`.

use nalgebra::{Complex, Matrix4, SMatrix, Schur, SVD};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrices::build_unconditional;
use crate::model::{Mat4, SystemParams};

/// Eigenvalues with real part above `-STABILITY_TOL` count as non-decaying.
pub const STABILITY_TOL: f64 = 1e-10;
/// Minimum `‖Bx‖ / ‖x‖` (or stacked singular value) for a mode to count as observed.
pub const DETECTABILITY_TOL: f64 = 1e-8;

const SCHUR_EPS: f64 = 1e-14;
const MAX_SWEEPS: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityVerdict {
    pub is_stable: bool,
    pub spectral_abscissa: f64,
    /// Sorted by real part, largest first.
    pub eigenvalues: Vec<Complex64>,
}

pub fn eigenvalues(a: &Mat4) -> Result<Vec<Complex64>> {
    let schur = Schur::try_new(*a, SCHUR_EPS, MAX_SWEEPS)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    let mut ev: Vec<Complex64> = schur
        .complex_eigenvalues()
        .iter()
        .map(|z| Complex64::new(z.re, z.im))
        .collect();
    if ev.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite eigenvalue".into()));
    }
    ev.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
    Ok(ev)
}

pub fn is_hurwitz(a: &Mat4) -> Result<StabilityVerdict> {
    let eigenvalues = eigenvalues(a)?;
    let spectral_abscissa = eigenvalues[0].re;
    Ok(StabilityVerdict {
        is_stable: spectral_abscissa < -STABILITY_TOL,
        spectral_abscissa,
        eigenvalues,
    })
}

/// Hurwitz verdicts on a `(Δ, g)` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityMap {
    pub deltas: Vec<f64>,
    pub gs: Vec<f64>,
    /// `stable[i][j]` refers to `(deltas[i], gs[j])`.
    pub stable: Vec<Vec<bool>>,
    pub spectral_abscissa: Vec<Vec<f64>>,
}

impl StabilityMap {
    /// Stable detunings for the `j`-th coupling.
    pub fn stable_deltas(&self, j: usize) -> Vec<f64> {
        self.deltas
            .iter()
            .zip(&self.stable)
            .filter(|(_, row)| row[j])
            .map(|(d, _)| *d)
            .collect()
    }
}

pub fn stability_map(
    delta_grid: &[f64],
    g_grid: &[f64],
    kappa: f64,
    gamma: f64,
    omega_m: f64,
) -> Result<StabilityMap> {
    if delta_grid.is_empty() || g_grid.is_empty() {
        return Err(Error::Domain(
            "stability map grids must be non-empty".into(),
        ));
    }
    let rows: Vec<Vec<(bool, f64)>> = delta_grid
        .par_iter()
        .map(|&delta| {
            g_grid
                .iter()
                .map(|&g| {
                    let p = SystemParams::dimensionless(omega_m, delta, g, kappa, gamma);
                    p.check()?;
                    let v = is_hurwitz(&build_unconditional(&p).a)?;
                    Ok((v.is_stable, v.spectral_abscissa))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilityMap {
        deltas: delta_grid.to_vec(),
        gs: g_grid.to_vec(),
        stable: rows
            .iter()
            .map(|r| r.iter().map(|c| c.0).collect())
            .collect(),
        spectral_abscissa: rows
            .iter()
            .map(|r| r.iter().map(|c| c.1).collect())
            .collect(),
    })
}

type ComplexSvd<const R: usize> = SVD<Complex<f64>, nalgebra::Const<R>, nalgebra::Const<4>>;

fn complexify(m: &Mat4) -> Matrix4<Complex<f64>> {
    m.map(|v| Complex::new(v, 0.0))
}

fn sorted_singular_values<const R: usize>(
    m: SMatrix<Complex<f64>, R, 4>,
    with_v: bool,
) -> Result<(Vec<f64>, Option<ComplexSvd<R>>)>
where
    nalgebra::Const<R>: nalgebra::DimMin<nalgebra::Const<4>, Output = nalgebra::Const<4>>,
{
    let svd = SVD::try_new(m, false, with_v, SCHUR_EPS, MAX_SWEEPS)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(f64::total_cmp);
    Ok((s, with_v.then_some(svd)))
}

/// PBH detectability of `(B, Ã)`.
///
/// For each eigenvalue `λ` with `Re λ ≥ −STABILITY_TOL`, a simple eigenvalue
/// is tested through its eigenvector (the null vector of `Ã − λI`); repeated
/// or nearly defective eigenvalues fall back to the rank of `[Ã − λI; B]`.
pub fn is_detectable(b: &Mat4, a_tilde: &Mat4) -> Result<bool> {
    let scale = a_tilde.norm().max(1.0);
    let bc = complexify(b);
    for lambda in eigenvalues(a_tilde)? {
        if lambda.re < -STABILITY_TOL {
            continue;
        }
        let shifted = complexify(a_tilde) - Matrix4::<Complex<f64>>::identity() * lambda;
        let (s, svd) = sorted_singular_values(shifted, true)?;
        let isolated = s[1] > 1e-6 * scale;
        let observed = if isolated {
            let svd = svd.expect("requested right singular vectors");
            let v_t = svd.v_t.expect("requested right singular vectors");
            let k = svd
                .singular_values
                .iter()
                .enumerate()
                .min_by(|x, y| x.1.total_cmp(y.1))
                .map(|(k, _)| k)
                .unwrap_or(0);
            let x = v_t.row(k).adjoint();
            (bc * x).norm() > DETECTABILITY_TOL * x.norm()
        } else {
            let mut stacked = SMatrix::<Complex<f64>, 8, 4>::zeros();
            stacked.fixed_view_mut::<4, 4>(0, 0).copy_from(&shifted);
            stacked.fixed_view_mut::<4, 4>(4, 0).copy_from(&bc);
            let (s, _) = sorted_singular_values(stacked, false)?;
            s[0] > DETECTABILITY_TOL
        };
        if !observed {
            return Ok(false);
        }
    }
    Ok(true)
}
