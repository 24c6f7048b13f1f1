//! The concrete infection model: stochastic drift/diffusion, the
//! deterministic right-hand side, equilibria with the derived reproduction
//! number, and the auxiliary linear SDE that dominates the `x` compartment.

use crate::params::{ModelParams, NoiseParams, ParamViolation, StateVec, ValidationError};
use crate::sde::DiagonalSde;
use serde::{Deserialize, Serialize};

/// Drift vector of the stochastic system (identical to the deterministic
/// right-hand side):
///
/// ```text
/// (Λ − μ₁x − (1−η)βxz + qy,  (1−η)βxz − μ₂y − qy,  (1−ε)py − μ₃z)
/// ```
pub fn hbv_drift(state: &StateVec, params: &ModelParams) -> [f64; 3] {
    let StateVec { x, y, z } = *state;
    let infection = (1.0 - params.eta) * params.beta * x * z;
    [
        params.lambda - params.mu1 * x - infection + params.q * y,
        infection - params.mu2 * y - params.q * y,
        (1.0 - params.epsilon) * params.p * y - params.mu3 * z,
    ]
}

/// Diagonal of the diffusion matrix: `(σ₁x, σ₂y, σ₃z)`.
pub fn hbv_diffusion_diag(state: &StateVec, noise: &NoiseParams) -> [f64; 3] {
    [noise.sigma1 * state.x, noise.sigma2 * state.y, noise.sigma3 * state.z]
}

/// The full 3-dimensional stochastic system.
#[derive(Debug, Clone, Copy)]
pub struct HbvSystem {
    pub params: ModelParams,
    pub noise: NoiseParams,
}

impl DiagonalSde for HbvSystem {
    fn dim(&self) -> usize {
        3
    }

    fn drift(&self, state: &[f64], _t: f64, out: &mut [f64]) {
        let s = StateVec::new(state[0], state[1], state[2]);
        out.copy_from_slice(&hbv_drift(&s, &self.params));
    }

    fn diffusion_diag(&self, state: &[f64], _t: f64, out: &mut [f64]) {
        out[0] = self.noise.sigma1 * state[0];
        out[1] = self.noise.sigma2 * state[1];
        out[2] = self.noise.sigma3 * state[2];
    }

    fn diffusion_diag_deriv(&self, _state: &[f64], _t: f64, out: &mut [f64]) {
        out.copy_from_slice(&self.noise.as_array());
    }
}

impl HbvSystem {
    /// Deterministic right-hand side as a closure suitable for the ODE
    /// integrators.
    pub fn ode_rhs(&self) -> impl Fn(&[f64], f64, &mut [f64]) + '_ {
        move |state, _t, out| {
            let s = StateVec::new(state[0], state[1], state[2]);
            out.copy_from_slice(&hbv_drift(&s, &self.params));
        }
    }
}

/// The auxiliary linear SDE dominating the `x` compartment:
/// `dx₁ = (λ − μ₁x₁) dt + σ₁ x₁ dW₁`.
#[derive(Debug, Clone, Copy)]
pub struct X1System {
    pub lambda: f64,
    pub mu1: f64,
    pub sigma1: f64,
}

impl DiagonalSde for X1System {
    fn dim(&self) -> usize {
        1
    }
    fn drift(&self, state: &[f64], _t: f64, out: &mut [f64]) {
        out[0] = self.lambda - self.mu1 * state[0];
    }
    fn diffusion_diag(&self, state: &[f64], _t: f64, out: &mut [f64]) {
        out[0] = self.sigma1 * state[0];
    }
    fn diffusion_diag_deriv(&self, _state: &[f64], _t: f64, out: &mut [f64]) {
        out[0] = self.sigma1;
    }
}

/// The 1-dimensional dominating system for the given parameters.
pub fn x1_system(params: &ModelParams, noise: &NoiseParams) -> X1System {
    X1System { lambda: params.lambda, mu1: params.mu1, sigma1: noise.sigma1 }
}

/// Closed-form mean of the dominating process:
/// `E[x₁(t)] = x₁(0) e^{−μ₁t} + (λ/μ₁)(1 − e^{−μ₁t})`, with limit `λ/μ₁`.
pub fn x1_exact_mean(t: f64, x1_0: f64, params: &ModelParams) -> f64 {
    assert!(t >= 0.0, "time must be nonnegative");
    let decay = (-params.mu1 * t).exp();
    x1_0 * decay + params.lambda / params.mu1 * (1.0 - decay)
}

/// Steady states of the deterministic system.
///
/// The reproduction number is not given in the source model; it is derived
/// here by solving the steady-state equations and is validated against a
/// numerical root search in the test suite before any report trusts it:
///
/// ```text
/// r0 = (1−η)(1−ε) β p Λ / (μ₁ μ₃ (μ₂ + q))
/// ```
///
/// The endemic state exists (with positive components) exactly when
/// `r0 > 1`:
///
/// ```text
/// x̄ = Λ / (μ₁ r0),   ȳ = Λ (1 − 1/r0) / μ₂,   z̄ = (1−ε) p ȳ / μ₃
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibria {
    pub infection_free: StateVec,
    pub endemic: Option<StateVec>,
    /// Derived reproduction number (artifact construct, see above).
    pub r0: f64,
}

pub fn equilibria(params: &ModelParams) -> Equilibria {
    let infection_free = StateVec::new(params.lambda / params.mu1, 0.0, 0.0);
    let r0 = (1.0 - params.eta) * (1.0 - params.epsilon) * params.beta * params.p
        * params.lambda
        / (params.mu1 * params.mu3 * (params.mu2 + params.q));
    let endemic = if r0 > 1.0 {
        let x = params.lambda / (params.mu1 * r0);
        let y = params.lambda * (1.0 - 1.0 / r0) / params.mu2;
        let z = (1.0 - params.epsilon) * params.p * y / params.mu3;
        let candidate = StateVec::new(x, y, z);
        debug_assert!(
            equilibrium_residual(&candidate, params) < 1e-10,
            "endemic equilibrium residual too large"
        );
        Some(candidate)
    } else {
        None
    };
    Equilibria { infection_free, endemic, r0 }
}

/// Relative residual `|rhs(state)| / max(1, |scale|)` of a purported
/// equilibrium; both returned equilibria satisfy `< 1e-10`.
pub fn equilibrium_residual(state: &StateVec, params: &ModelParams) -> f64 {
    let rhs = hbv_drift(state, params);
    let scale = params
        .lambda
        .abs()
        .max(state.x.abs().max(state.y.abs()).max(state.z.abs()));
    let norm = (rhs[0] * rhs[0] + rhs[1] * rhs[1] + rhs[2] * rhs[2]).sqrt();
    norm / scale.max(1.0)
}

/// Validated model + noise + initial condition bundle for a simulation.
///
/// The positivity theorem for exact solutions assumes a strictly positive
/// initial state; numerically the infected compartments may start at
/// exactly zero (they then remain zero), which the coupling experiments
/// rely on.  Validation therefore requires `x > 0` and `y, z ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HbvConfig {
    pub params: ModelParams,
    pub noise: NoiseParams,
    pub initial: StateVec,
}

impl HbvConfig {
    pub fn validate(&self) -> Result<(), ValidationError> {
        let mut violations = crate::params::validate_params(self.params, self.noise)
            .err()
            .map(|e| e.violations)
            .unwrap_or_default();
        let x_ok = self.initial.x.is_finite() && self.initial.x > 0.0;
        if !x_ok {
            violations.push(ParamViolation::NonPositiveRate("x0"));
        }
        for (name, v) in [("y0", self.initial.y), ("z0", self.initial.z)] {
            let ok = v.is_finite() && v >= 0.0;
            if !ok {
                violations.push(ParamViolation::NegativeNoise(name));
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ValidationError { violations })
        }
    }

    pub fn system(&self) -> HbvSystem {
        HbvSystem { params: self.params, noise: self.noise }
    }
}
