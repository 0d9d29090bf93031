//! Oracles shared by the integration tests. Everything here is written from
//! the model equations directly and uses none of the library's solvers.

#![allow(dead_code)]

use levsim::{Mat4, Vec4};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Drift and diffusion written out entry by entry.
pub fn drift(w: f64, delta: f64, g: f64, kappa: f64) -> Mat4 {
    let mut a = Mat4::zeros();
    a[(0, 0)] = -kappa / 2.0;
    a[(0, 1)] = -delta;
    a[(1, 0)] = delta;
    a[(1, 1)] = -kappa / 2.0;
    a[(1, 2)] = -2.0 * g;
    a[(2, 3)] = w;
    a[(3, 0)] = -2.0 * g;
    a[(3, 2)] = -w;
    a
}

pub fn diffusion(kappa: f64, gamma: f64) -> Mat4 {
    Mat4::from_diagonal(&Vec4::new(kappa, kappa, 0.0, 4.0 * gamma))
}

/// Measurement matrices `(B, N)` from the efficiencies and homodyne phase.
pub fn measurement(kappa: f64, gamma: f64, eta1: f64, eta2: f64, phi: f64) -> (Mat4, Mat4) {
    let u = [phi.cos(), -phi.sin()];
    let h = (eta1 * kappa).sqrt();
    let mut n = Mat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            n[(i, j)] = h * u[i] * u[j];
        }
    }
    let mut b = n;
    b[(3, 2)] = (4.0 * eta2 * gamma).sqrt();
    (b, n)
}

/// Right-hand side of the conditional covariance equation.
pub struct Riccati {
    pub a_tilde: Mat4,
    pub d_tilde: Mat4,
    pub btb: Mat4,
}

impl Riccati {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        w: f64,
        delta: f64,
        g: f64,
        kappa: f64,
        gamma: f64,
        eta1: f64,
        eta2: f64,
        phi: f64,
    ) -> Self {
        let a = drift(w, delta, g, kappa);
        let d = diffusion(kappa, gamma);
        let (b, n) = measurement(kappa, gamma, eta1, eta2, phi);
        Self {
            a_tilde: a + n * b,
            d_tilde: d - n * n.transpose(),
            btb: b.transpose() * b,
        }
    }

    pub fn rhs(&self, s: &Mat4) -> Mat4 {
        self.a_tilde * s + s * self.a_tilde.transpose() - s * self.btb * s + self.d_tilde
    }
}

/// Classical fixed-step RK4 for `dσ/dt = f(σ)`.
pub fn rk4(f: impl Fn(&Mat4) -> Mat4, y0: Mat4, dt: f64, steps: usize) -> Mat4 {
    let mut y = y0;
    for _ in 0..steps {
        let k1 = f(&y);
        let k2 = f(&(y + k1 * (dt / 2.0)));
        let k3 = f(&(y + k2 * (dt / 2.0)));
        let k4 = f(&(y + k3 * dt));
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        if y.iter().any(|v| !v.is_finite() || v.abs() > 1e200) {
            return y.map(|_| f64::INFINITY);
        }
    }
    y
}

/// Smallest eigenvalue of the Hermitian matrix `σ + iΩ` through its real
/// 8×8 embedding.
pub fn min_uncertainty_eig(s: &Mat4) -> f64 {
    let mut omega = Mat4::zeros();
    omega[(0, 1)] = 1.0;
    omega[(1, 0)] = -1.0;
    omega[(2, 3)] = 1.0;
    omega[(3, 2)] = -1.0;
    let mut big = nalgebra::SMatrix::<f64, 8, 8>::zeros();
    big.fixed_view_mut::<4, 4>(0, 0).copy_from(s);
    big.fixed_view_mut::<4, 4>(4, 4).copy_from(s);
    big.fixed_view_mut::<4, 4>(0, 4).copy_from(&(-omega));
    big.fixed_view_mut::<4, 4>(4, 0).copy_from(&omega);
    nalgebra::SymmetricEigen::new(big).eigenvalues.min()
}

pub fn min_sym_eig(m: &Mat4) -> f64 {
    nalgebra::SymmetricEigen::new((m + m.transpose()) * 0.5)
        .eigenvalues
        .min()
}

/// Random dimensionless instance drawn over the plotted parameter ranges.
#[derive(Clone, Copy, Debug)]
pub struct Instance {
    pub delta: f64,
    pub g: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub phi: f64,
}

impl Instance {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        Self {
            delta: rng.gen_range(-6.0..6.0),
            g: rng.gen_range(0.0..3.0),
            kappa: rng.gen_range(0.2..5.0),
            gamma: rng.gen_range(0.01..1.0),
            eta1: rng.gen_range(0.0..1.0),
            eta2: rng.gen_range(0.0..1.0),
            phi: rng.gen_range(0.0..std::f64::consts::PI),
        }
    }

    pub fn params(&self) -> levsim::SystemParams {
        levsim::SystemParams::dimensionless(1.0, self.delta, self.g, self.kappa, self.gamma)
    }

    pub fn meas(&self) -> levsim::MeasurementParams {
        levsim::MeasurementParams::new(self.eta1, self.eta2, self.phi)
    }

    pub fn riccati(&self) -> Riccati {
        Riccati::new(
            1.0, self.delta, self.g, self.kappa, self.gamma, self.eta1, self.eta2, self.phi,
        )
    }
}
