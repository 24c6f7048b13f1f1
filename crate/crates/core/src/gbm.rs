//! Geometric Brownian motion, the analytic benchmark system used by the
//! strong-convergence harness: `dx = a x dt + b x dW` with closed-form
//! solution `x(t) = x₀ · exp((a − b²/2) t + b W(t))`.

use crate::numeric::compensated_sum;
use crate::sde::DiagonalSde;
use crate::wiener::IncrementMatrix;

#[derive(Debug, Clone, Copy)]
pub struct Gbm {
    pub a: f64,
    pub b: f64,
}

impl DiagonalSde for Gbm {
    fn dim(&self) -> usize {
        1
    }
    fn drift(&self, state: &[f64], _t: f64, out: &mut [f64]) {
        out[0] = self.a * state[0];
    }
    fn diffusion_diag(&self, state: &[f64], _t: f64, out: &mut [f64]) {
        out[0] = self.b * state[0];
    }
    fn diffusion_diag_deriv(&self, _state: &[f64], _t: f64, out: &mut [f64]) {
        out[0] = self.b;
    }
}

impl Gbm {
    /// Exact solution at time `t` given the Brownian value `w_t`.
    pub fn exact(&self, x0: f64, t: f64, w_t: f64) -> f64 {
        x0 * ((self.a - 0.5 * self.b * self.b) * t + self.b * w_t).exp()
    }

    /// Exact terminal value on the Brownian path described by a
    /// single-column increment matrix (compensated total).
    pub fn exact_terminal(&self, x0: f64, increments: &IncrementMatrix) -> f64 {
        assert_eq!(increments.dims(), 1);
        let w_t = compensated_sum(increments.column(0));
        let t = increments.grid().t_end() - increments.grid().t0();
        self.exact(x0, t, w_t)
    }
}
