//! Adaptive Dormand–Prince 5(4) stepping for autonomous matrix-valued ODEs.

use crate::model::Mat4;

const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
// fifth-order weights (also the last stage row, FSAL)
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// difference between fifth- and fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

pub(crate) struct Dopri5<F: Fn(&Mat4) -> Mat4> {
    rhs: F,
    pub rtol: f64,
    pub atol: f64,
    pub h: f64,
    pub h_max: f64,
    pub t: f64,
    pub y: Mat4,
    k1: Mat4,
    pub accepted: usize,
    pub rejected: usize,
}

impl<F: Fn(&Mat4) -> Mat4> Dopri5<F> {
    pub fn new(rhs: F, y0: Mat4, h0: f64) -> Self {
        let k1 = rhs(&y0);
        Self {
            rhs,
            rtol: 1e-9,
            atol: 1e-11,
            h: h0,
            h_max: f64::INFINITY,
            t: 0.0,
            y: y0,
            k1,
            accepted: 0,
            rejected: 0,
        }
    }

    /// Attempts steps until one is accepted. Returns `false` if the step size
    /// collapsed or the solution became non-finite.
    pub fn step(&mut self) -> bool {
        loop {
            let h = self.h.min(self.h_max);
            let y = &self.y;
            let k1 = self.k1;
            let k2 = (self.rhs)(&(y + k1 * (h * A2[0])));
            let k3 = (self.rhs)(&(y + (k1 * A3[0] + k2 * A3[1]) * h));
            let k4 = (self.rhs)(&(y + (k1 * A4[0] + k2 * A4[1] + k3 * A4[2]) * h));
            let k5 = (self.rhs)(&(y + (k1 * A5[0] + k2 * A5[1] + k3 * A5[2] + k4 * A5[3]) * h));
            let k6 = (self.rhs)(
                &(y + (k1 * A6[0] + k2 * A6[1] + k3 * A6[2] + k4 * A6[3] + k5 * A6[4]) * h),
            );
            let y_new = y + (k1 * B[0] + k3 * B[2] + k4 * B[3] + k5 * B[4] + k6 * B[5]) * h;
            let k7 = (self.rhs)(&y_new);
            let err = (k1 * E[0] + k3 * E[2] + k4 * E[3] + k5 * E[4] + k6 * E[5] + k7 * E[6]) * h;

            let mut err_norm: f64 = 0.0;
            for ((e, a), b) in err.iter().zip(y.iter()).zip(y_new.iter()) {
                let sc = self.atol + self.rtol * a.abs().max(b.abs());
                err_norm = err_norm.max((e / sc).abs());
            }
            if !err_norm.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                self.h = h * 0.2;
                self.rejected += 1;
                if self.h < 1e-14 * (1.0 + self.t.abs()) {
                    return false;
                }
                continue;
            }
            let factor = if err_norm == 0.0 {
                5.0
            } else {
                (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err_norm <= 1.0 {
                self.t += h;
                self.y = y_new;
                self.k1 = k7;
                self.h = h * factor;
                self.accepted += 1;
                return true;
            }
            self.h = h * factor.min(1.0);
            self.rejected += 1;
            if self.h < 1e-14 * (1.0 + self.t.abs()) {
                return false;
            }
        }
    }
}
