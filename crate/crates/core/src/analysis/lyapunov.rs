//! Sample-path decay-rate estimation and time averages.
//!
//! Almost-sure exponential stability of the infected compartments is a
//! statement about `limsup (1/t) ln(y(t)+z(t))`; at finite horizon the
//! testable surrogate is the least-squares slope of `ln(y+z)` over the
//! trailing portion of a trajectory.

use crate::analysis::AnalysisError;
use crate::numeric::{linear_fit, trapezoid_average};
use crate::sde::Trajectory;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct LyapunovEstimate {
    /// Fitted d/dt of ln(y+z) over the tail.
    pub slope: f64,
    pub tail_fraction: f64,
    /// Quality of the linear fit; estimates with r² < 0.8 should not be
    /// quoted as decay rates.
    pub r_squared: f64,
    /// Theoretical bound −|λ_max|/2 when a stability report supplied one.
    pub bound: Option<f64>,
}

/// Least-squares slope of `ln(y(t)+z(t))` over the final `tail_fraction`
/// of the grid.  Only nodes with `y+z > 0` enter the fit; if the tail has
/// fewer than two such nodes the estimate is degenerate.
pub fn estimate_lyapunov(
    traj: &Trajectory,
    tail_fraction: f64,
    bound: Option<f64>,
) -> Result<LyapunovEstimate, AnalysisError> {
    assert_eq!(traj.dim(), 3, "decay estimation expects a 3-compartment trajectory");
    assert!(
        tail_fraction > 0.0 && tail_fraction <= 1.0,
        "tail fraction must lie in (0, 1]"
    );
    let n = traj.len();
    let start = ((1.0 - tail_fraction) * (n - 1) as f64).floor() as usize;

    let mut ts = Vec::with_capacity(n - start);
    let mut logs = Vec::with_capacity(n - start);
    for i in start..n {
        let s = traj.state(i);
        let total = s[1] + s[2];
        if total > 0.0 {
            ts.push(traj.grid().time_at(i));
            logs.push(total.ln());
        }
    }
    if ts.len() < 2 {
        return Err(AnalysisError::DegenerateTail);
    }
    let (slope, _intercept, r_squared) = linear_fit(&ts, &logs);
    Ok(LyapunovEstimate { slope, tail_fraction, r_squared, bound })
}

/// Trapezoidal time average of one component over the trajectory's span.
pub fn time_average(traj: &Trajectory, component: usize) -> f64 {
    let values = traj.component(component);
    if values.len() == 1 {
        return values[0];
    }
    trapezoid_average(&values)
}
