//! Uniform time grids.

use serde::{Deserialize, Serialize};
use std::fmt;

/// A uniform discretization of `[t0, t_end]` into `n_steps` intervals.
///
/// Grid times are always computed as `t0 + i as f64 * dt`, so two grids
/// constructed from the same fields produce bit-identical time stamps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimGrid {
    t0: f64,
    t_end: f64,
    n_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GridError {
    /// `t_end` must be strictly greater than `t0`.
    EmptySpan,
    /// At least one step is required.
    ZeroSteps,
    /// Endpoints must be finite.
    NonFiniteEndpoint,
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::EmptySpan => write!(f, "grid requires t_end > t0"),
            GridError::ZeroSteps => write!(f, "grid requires n_steps >= 1"),
            GridError::NonFiniteEndpoint => write!(f, "grid endpoints must be finite"),
        }
    }
}

impl std::error::Error for GridError {}

impl SimGrid {
    pub fn new(t0: f64, t_end: f64, n_steps: usize) -> Result<Self, GridError> {
        if !t0.is_finite() || !t_end.is_finite() {
            return Err(GridError::NonFiniteEndpoint);
        }
        let increasing = t_end > t0;
        if !increasing {
            return Err(GridError::EmptySpan);
        }
        if n_steps == 0 {
            return Err(GridError::ZeroSteps);
        }
        Ok(SimGrid { t0, t_end, n_steps })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Step size `(t_end − t0) / n_steps`.
    pub fn dt(&self) -> f64 {
        (self.t_end - self.t0) / self.n_steps as f64
    }

    /// Time of grid node `i`, for `i` in `0..=n_steps`.
    pub fn time_at(&self, i: usize) -> f64 {
        debug_assert!(i <= self.n_steps);
        self.t0 + i as f64 * self.dt()
    }

    /// All `n_steps + 1` node times.
    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.time_at(i)).collect()
    }

    /// Index of the grid node closest to `t`, clamped into range.
    pub fn nearest_index(&self, t: f64) -> usize {
        let raw = ((t - self.t0) / self.dt()).round();
        if raw <= 0.0 {
            0
        } else {
            (raw as usize).min(self.n_steps)
        }
    }

    /// Grid with the same span and `n_steps / factor` steps.
    /// `factor` must divide `n_steps` (checked by the caller).
    pub(crate) fn coarsened(&self, factor: usize) -> SimGrid {
        debug_assert!(factor >= 1 && self.n_steps.is_multiple_of(factor));
        SimGrid { t0: self.t0, t_end: self.t_end, n_steps: self.n_steps / factor }
    }
}
