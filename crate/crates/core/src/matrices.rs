//! Drift, diffusion and measurement matrices of the moment equations.
//!
//! Unconditional dynamics: `dR/dt = A R`, `dσ/dt = Aσ + σAᵀ + D`.
//! Conditional dynamics under monitoring: `dσ/dt = Ãσ + σÃᵀ − σBᵀBσ + D̃`
//! with `Ã = A + N B` and `D̃ = D − N Nᵀ`.

use crate::model::{Mat4, MeasurementParams, SystemParams};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnconditionalMatrices {
    /// Drift matrix.
    pub a: Mat4,
    /// Diffusion matrix, `diag(κ, κ, 0, 4Γ)`.
    pub d: Mat4,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionalMatrices {
    /// Unconditional drift, kept for the first-moment equation.
    pub a: Mat4,
    /// Unconditional diffusion.
    pub d: Mat4,
    pub a_tilde: Mat4,
    pub d_tilde: Mat4,
    /// Measurement matrix.
    pub b: Mat4,
    /// Noise correlation matrix.
    pub n: Mat4,
}

impl ConditionalMatrices {
    /// `BᵀB`, the quadratic coefficient of the Riccati equation.
    pub fn information(&self) -> Mat4 {
        self.b.transpose() * self.b
    }

    /// Right-hand side of the Riccati equation at `sigma`.
    pub fn riccati_rhs(&self, sigma: &Mat4) -> Mat4 {
        let at_s = self.a_tilde * sigma;
        at_s + at_s.transpose() - sigma * self.information() * sigma + self.d_tilde
    }

    /// Noise coupling `N − σBᵀ` of the first-moment equation.
    pub fn innovation_gain(&self, sigma: &Mat4) -> Mat4 {
        self.n - sigma * self.b.transpose()
    }
}

pub fn build_unconditional(params: &SystemParams) -> UnconditionalMatrices {
    let SystemParams {
        omega_m: w,
        delta,
        g,
        kappa: k,
        gamma,
        ..
    } = *params;
    #[rustfmt::skip]
    let a = Mat4::new(
        -k / 2.0, -delta,    0.0,       0.0,
         delta,   -k / 2.0, -2.0 * g,   0.0,
         0.0,      0.0,      0.0,       w,
        -2.0 * g,  0.0,     -w,         0.0,
    );
    let d = Mat4::from_diagonal(&crate::model::Vec4::new(k, k, 0.0, 4.0 * gamma));
    UnconditionalMatrices { a, d }
}

pub fn build_conditional(params: &SystemParams, meas: &MeasurementParams) -> ConditionalMatrices {
    let UnconditionalMatrices { a, d } = build_unconditional(params);
    let h = (meas.eta1 * params.kappa).sqrt();
    let (s, c) = meas.phi.sin_cos();

    let mut n = Mat4::zeros();
    n[(0, 0)] = h * c * c;
    n[(0, 1)] = -h * s * c;
    n[(1, 0)] = -h * s * c;
    n[(1, 1)] = h * s * s;

    let mut b = n;
    b[(3, 2)] = (4.0 * meas.eta2 * params.gamma).sqrt();

    ConditionalMatrices {
        a,
        d,
        a_tilde: a + n * b,
        d_tilde: d - n * n.transpose(),
        b,
        n,
    }
}
