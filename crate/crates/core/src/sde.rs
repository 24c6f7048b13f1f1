//! Diagonal-noise SDE integration.
//!
//! Systems have the Itô form `du = f(u, t) dt + diag(b(u, t)) dW` with one
//! independent Wiener process per component.  Two fixed-step schemes are
//! provided:
//!
//! * **Euler–Maruyama**: `uᵢ ← uᵢ + fᵢ Δt + bᵢ ΔWᵢ` — strong order 0.5.
//! * **Milstein**: adds the diagonal correction
//!   `½ bᵢ (∂bᵢ/∂uᵢ) (ΔWᵢ² − Δt)` — strong order 1.0 for this noise
//!   structure, no Lévy-area terms needed.
//!
//! A classical fixed-step RK4 integrator covers the noise-free baseline on
//! the same grid.
//!
//! Integrators never invent data: a component that steps below zero is
//! recorded as a negativity event, and only the `ProjectToZero` policy
//! additionally clamps it (after recording).  `Raw` trajectories are what
//! the scheme produced, bit for bit.

use crate::grid::SimGrid;
use crate::params::StateVec;
use crate::wiener::IncrementMatrix;
use serde::{Deserialize, Serialize};
use std::fmt;

/// A diagonal-noise SDE: drift vector, diffusion diagonal, and the
/// per-component derivative ∂bᵢ/∂uᵢ needed by the Milstein correction.
///
/// Implementations must be pure functions of `(state, t)`.
pub trait DiagonalSde {
    fn dim(&self) -> usize;
    fn drift(&self, state: &[f64], t: f64, out: &mut [f64]);
    fn diffusion_diag(&self, state: &[f64], t: f64, out: &mut [f64]);
    fn diffusion_diag_deriv(&self, state: &[f64], t: f64, out: &mut [f64]);
}

/// Integration scheme tag carried by every trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    EulerMaruyama,
    Milstein,
    Rk4,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::EulerMaruyama => write!(f, "euler-maruyama"),
            Scheme::Milstein => write!(f, "milstein"),
            Scheme::Rk4 => write!(f, "rk4"),
        }
    }
}

/// What to do when a component steps below zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativityPolicy {
    /// Record the event, never modify values.
    Raw,
    /// Record the event, then replace the negative component with 0.
    ProjectToZero,
}

/// A component of the state went negative at a grid node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegativityEvent {
    /// Index of the grid node (1-based steps land on node `step`).
    pub step: usize,
    pub component: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SdeError {
    /// The state left the finite floats; `step` is the grid node at which
    /// it happened.
    NonFiniteState { step: usize },
}

impl fmt::Display for SdeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SdeError::NonFiniteState { step } => {
                write!(f, "non-finite state at step {step}")
            }
        }
    }
}

impl std::error::Error for SdeError {}

/// Dense solution on a uniform grid: `n_steps + 1` states of dimension
/// `dim`, stored step-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: SimGrid,
    dim: usize,
    /// `data[i * dim + c]` is component `c` at node `i`.
    data: Vec<f64>,
    pub negativity_events: Vec<NegativityEvent>,
    pub scheme: Scheme,
}

impl Trajectory {
    pub fn grid(&self) -> &SimGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.grid.n_steps() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// State at grid node `i`.
    pub fn state(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// One component over all grid nodes.
    pub fn component(&self, c: usize) -> Vec<f64> {
        assert!(c < self.dim);
        (0..self.len()).map(|i| self.data[i * self.dim + c]).collect()
    }

    /// State at node `i` as a 3-vector (infection-model trajectories).
    pub fn state_vec(&self, i: usize) -> StateVec {
        assert_eq!(self.dim, 3, "state_vec requires a 3-dimensional trajectory");
        let s = self.state(i);
        StateVec::new(s[0], s[1], s[2])
    }

    /// Build a trajectory from explicit states (tests, file import).
    pub fn from_states(grid: SimGrid, dim: usize, states: Vec<f64>, scheme: Scheme) -> Self {
        assert_eq!(states.len(), (grid.n_steps() + 1) * dim, "state count mismatch");
        Trajectory { grid, dim, data: states, negativity_events: Vec::new(), scheme }
    }

    /// Every `stride`-th node as a new trajectory (long-horizon storage).
    /// `stride` must divide `n_steps`.
    pub fn thinned(&self, stride: usize) -> Trajectory {
        assert!(stride >= 1 && self.grid.n_steps().is_multiple_of(stride));
        let coarse = self.grid.coarsened(stride);
        let mut data = Vec::with_capacity((coarse.n_steps() + 1) * self.dim);
        for i in (0..self.len()).step_by(stride) {
            data.extend_from_slice(self.state(i));
        }
        Trajectory {
            grid: coarse,
            dim: self.dim,
            data,
            negativity_events: Vec::new(),
            scheme: self.scheme,
        }
    }
}

/// One Euler–Maruyama step: `u + f Δt + b ⊙ ΔW`.
pub fn em_step<S: DiagonalSde + ?Sized>(
    state: &[f64],
    t: f64,
    dt: f64,
    dw: &[f64],
    system: &S,
) -> Result<Vec<f64>, SdeError> {
    let dim = system.dim();
    assert_eq!(state.len(), dim);
    assert_eq!(dw.len(), dim, "increment dimension mismatch");
    assert!(dt > 0.0, "step size must be positive");
    let mut drift = vec![0.0; dim];
    let mut diag = vec![0.0; dim];
    system.drift(state, t, &mut drift);
    system.diffusion_diag(state, t, &mut diag);
    let mut out = vec![0.0; dim];
    for i in 0..dim {
        out[i] = state[i] + drift[i] * dt + diag[i] * dw[i];
        if !out[i].is_finite() {
            return Err(SdeError::NonFiniteState { step: 0 });
        }
    }
    Ok(out)
}

/// One Milstein step: Euler–Maruyama plus `½ bᵢ bᵢ' (ΔWᵢ² − Δt)`.
pub fn milstein_step<S: DiagonalSde + ?Sized>(
    state: &[f64],
    t: f64,
    dt: f64,
    dw: &[f64],
    system: &S,
) -> Result<Vec<f64>, SdeError> {
    let dim = system.dim();
    assert_eq!(state.len(), dim);
    assert_eq!(dw.len(), dim, "increment dimension mismatch");
    assert!(dt > 0.0, "step size must be positive");
    let mut drift = vec![0.0; dim];
    let mut diag = vec![0.0; dim];
    let mut deriv = vec![0.0; dim];
    system.drift(state, t, &mut drift);
    system.diffusion_diag(state, t, &mut diag);
    system.diffusion_diag_deriv(state, t, &mut deriv);
    let mut out = vec![0.0; dim];
    for i in 0..dim {
        out[i] = state[i]
            + drift[i] * dt
            + diag[i] * dw[i]
            + 0.5 * diag[i] * deriv[i] * (dw[i] * dw[i] - dt);
        if !out[i].is_finite() {
            return Err(SdeError::NonFiniteState { step: 0 });
        }
    }
    Ok(out)
}

/// Integrate a diagonal-noise SDE over the grid with the given increments.
///
/// The increment matrix must match the grid and the system dimension.
/// Negativity events are recorded at the node where they appear; the `Raw`
/// policy never alters values.
pub fn integrate<S: DiagonalSde + ?Sized>(
    system: &S,
    initial: &[f64],
    grid: SimGrid,
    increments: &IncrementMatrix,
    scheme: Scheme,
    policy: NegativityPolicy,
) -> Result<Trajectory, SdeError> {
    let dim = system.dim();
    assert_eq!(initial.len(), dim, "initial condition dimension mismatch");
    assert_eq!(increments.dims(), dim, "increment matrix dimension mismatch");
    assert_eq!(increments.n_steps(), grid.n_steps(), "increment matrix grid mismatch");
    assert!(
        initial.iter().all(|v| v.is_finite()),
        "initial condition must be finite"
    );
    let milstein = match scheme {
        Scheme::EulerMaruyama => false,
        Scheme::Milstein => true,
        Scheme::Rk4 => panic!("RK4 is an ODE scheme; use integrate_ode"),
    };

    let n = grid.n_steps();
    let dt = grid.dt();
    let mut data = Vec::with_capacity((n + 1) * dim);
    data.extend_from_slice(initial);
    let mut events = Vec::new();

    let mut state = initial.to_vec();
    let mut next = vec![0.0; dim];
    let mut drift = vec![0.0; dim];
    let mut diag = vec![0.0; dim];
    let mut deriv = vec![0.0; dim];
    let mut dw = vec![0.0; dim];

    for i in 0..n {
        let t = grid.time_at(i);
        for d in 0..dim {
            dw[d] = increments.at(i, d);
        }
        system.drift(&state, t, &mut drift);
        system.diffusion_diag(&state, t, &mut diag);
        if milstein {
            system.diffusion_diag_deriv(&state, t, &mut deriv);
            for d in 0..dim {
                next[d] = state[d]
                    + drift[d] * dt
                    + diag[d] * dw[d]
                    + 0.5 * diag[d] * deriv[d] * (dw[d] * dw[d] - dt);
            }
        } else {
            for d in 0..dim {
                next[d] = state[d] + drift[d] * dt + diag[d] * dw[d];
            }
        }
        for d in 0..dim {
            if !next[d].is_finite() {
                return Err(SdeError::NonFiniteState { step: i + 1 });
            }
            if next[d] < 0.0 {
                events.push(NegativityEvent { step: i + 1, component: d });
                if policy == NegativityPolicy::ProjectToZero {
                    next[d] = 0.0;
                }
            }
        }
        data.extend_from_slice(&next);
        state.copy_from_slice(&next);
    }

    Ok(Trajectory { grid, dim, data, negativity_events: events, scheme })
}

/// Classical fixed-step RK4 for `du/dt = rhs(u, t)` on the grid.
pub fn integrate_ode<F>(rhs: F, initial: &[f64], grid: SimGrid) -> Result<Trajectory, SdeError>
where
    F: Fn(&[f64], f64, &mut [f64]),
{
    let dim = initial.len();
    assert!(dim >= 1);
    assert!(initial.iter().all(|v| v.is_finite()), "initial condition must be finite");
    let n = grid.n_steps();
    let dt = grid.dt();
    let mut data = Vec::with_capacity((n + 1) * dim);
    data.extend_from_slice(initial);

    let mut state = initial.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    let mut events = Vec::new();

    for i in 0..n {
        let t = grid.time_at(i);
        rhs(&state, t, &mut k1);
        for d in 0..dim {
            tmp[d] = state[d] + 0.5 * dt * k1[d];
        }
        rhs(&tmp, t + 0.5 * dt, &mut k2);
        for d in 0..dim {
            tmp[d] = state[d] + 0.5 * dt * k2[d];
        }
        rhs(&tmp, t + 0.5 * dt, &mut k3);
        for d in 0..dim {
            tmp[d] = state[d] + dt * k3[d];
        }
        rhs(&tmp, t + dt, &mut k4);
        for d in 0..dim {
            state[d] += dt / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
            if !state[d].is_finite() {
                return Err(SdeError::NonFiniteState { step: i + 1 });
            }
            if state[d] < 0.0 {
                events.push(NegativityEvent { step: i + 1, component: d });
            }
        }
        data.extend_from_slice(&state);
    }

    Ok(Trajectory { grid, dim, data, negativity_events: events, scheme: Scheme::Rk4 })
}

/// Deterministic forward Euler on the grid; the zero-noise limit of
/// Euler–Maruyama, kept as an explicit reference for reduction tests.
pub fn integrate_euler<F>(rhs: F, initial: &[f64], grid: SimGrid) -> Result<Trajectory, SdeError>
where
    F: Fn(&[f64], f64, &mut [f64]),
{
    let dim = initial.len();
    let n = grid.n_steps();
    let dt = grid.dt();
    let mut data = Vec::with_capacity((n + 1) * dim);
    data.extend_from_slice(initial);
    let mut state = initial.to_vec();
    let mut k = vec![0.0; dim];
    let mut events = Vec::new();
    for i in 0..n {
        rhs(&state, grid.time_at(i), &mut k);
        for d in 0..dim {
            state[d] += k[d] * dt;
            if !state[d].is_finite() {
                return Err(SdeError::NonFiniteState { step: i + 1 });
            }
            if state[d] < 0.0 {
                events.push(NegativityEvent { step: i + 1, component: d });
            }
        }
        data.extend_from_slice(&state);
    }
    Ok(Trajectory { grid, dim, data, negativity_events: events, scheme: Scheme::EulerMaruyama })
}
