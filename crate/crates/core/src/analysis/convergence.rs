//! Strong-convergence measurement on a dyadic step-size ladder.
//!
//! Every level integrates the *same* Brownian paths: increments are drawn
//! once on the finest grid and summed exactly onto each coarser grid, so
//! the measured error `E‖X_dt(T) − X_ref(T)‖` isolates the scheme's strong
//! order (0.5 for Euler–Maruyama, 1.0 for Milstein with diagonal noise).

use crate::analysis::{for_each_path, AnalysisError};
use crate::grid::SimGrid;
use crate::numeric::linear_fit;
use crate::rng::{derive_stream, RunSeed};
use crate::sde::{integrate, DiagonalSde, NegativityPolicy, Scheme};
use crate::wiener::{coarsen_increments, sample_wiener_increments, IncrementMatrix};
use serde::Serialize;

/// What the per-path terminal values are compared against.
pub enum ReferenceSolution<'a> {
    /// Closed-form terminal state as a function of the fine-grid Brownian
    /// path (available for benchmark systems like geometric Brownian
    /// motion).
    Analytic(&'a (dyn Fn(&IncrementMatrix) -> Vec<f64> + Sync)),
    /// The same scheme on the finest ladder grid.  The finest level is
    /// then excluded from the fit (its error is identically zero).
    FineGrid,
}

impl ReferenceSolution<'_> {
    fn tag(&self) -> &'static str {
        match self {
            ReferenceSolution::Analytic(_) => "analytic",
            ReferenceSolution::FineGrid => "fine_grid",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub scheme: Scheme,
    /// Step sizes, strictly decreasing (coarsest first).
    pub dt_ladder: Vec<f64>,
    /// `E‖X_dt(T) − X_ref(T)‖` per ladder entry.
    pub strong_errors: Vec<f64>,
    /// Least-squares slope of `ln error` against `ln dt`.
    pub fitted_order: f64,
    pub reference: String,
    pub n_paths: usize,
}

/// Measure strong errors of `scheme` on a ladder of `levels` dyadic grids
/// with `base_steps`, `base_steps·2`, …, `base_steps·2^(levels−1)` steps
/// over `[0, t_end]`.
pub fn strong_convergence<S: DiagonalSde + Sync + ?Sized>(
    system: &S,
    initial: &[f64],
    t_end: f64,
    base_steps: usize,
    levels: usize,
    n_paths: usize,
    master_seed: u64,
    scheme: Scheme,
    reference: ReferenceSolution<'_>,
) -> Result<ConvergenceReport, AnalysisError> {
    assert!(levels >= 3, "need at least three ladder levels for a fit");
    assert!(base_steps >= 1);
    assert!(t_end > 0.0);
    let dim = system.dim();
    let fine_steps = base_steps << (levels - 1);
    let fine_grid = SimGrid::new(0.0, t_end, fine_steps).expect("valid ladder grid");

    // Number of levels whose error enters the fit.
    let fitted_levels = match reference {
        ReferenceSolution::Analytic(_) => levels,
        ReferenceSolution::FineGrid => levels - 1,
    };

    let per_path = for_each_path(n_paths, |path_index| {
        let mut stream = derive_stream(RunSeed::new(master_seed, path_index));
        let fine = sample_wiener_increments(fine_grid, &mut stream, dim);

        let reference_terminal: Vec<f64> = match &reference {
            ReferenceSolution::Analytic(exact) => exact(&fine),
            ReferenceSolution::FineGrid => {
                let traj = integrate(
                    system,
                    initial,
                    fine_grid,
                    &fine,
                    scheme,
                    NegativityPolicy::Raw,
                )?;
                traj.state(fine_steps).to_vec()
            }
        };

        let mut errors = Vec::with_capacity(fitted_levels);
        for level in 0..fitted_levels {
            let factor = 1usize << (levels - 1 - level);
            let coarse = coarsen_increments(&fine, factor)
                .expect("dyadic factor divides the fine grid");
            let grid = *coarse.grid();
            let traj =
                integrate(system, initial, grid, &coarse, scheme, NegativityPolicy::Raw)?;
            let terminal = traj.state(grid.n_steps());
            let err: f64 = terminal
                .iter()
                .zip(&reference_terminal)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            errors.push(err);
        }
        Ok(errors)
    })?;

    // Mean error per level, folded in path order.
    let mut strong_errors = vec![0.0; fitted_levels];
    for path_errors in &per_path {
        for (acc, e) in strong_errors.iter_mut().zip(path_errors) {
            *acc += e;
        }
    }
    for e in &mut strong_errors {
        *e /= n_paths as f64;
    }

    let dt_ladder: Vec<f64> = (0..fitted_levels)
        .map(|level| t_end / (base_steps << level) as f64)
        .collect();

    let log_dt: Vec<f64> = dt_ladder.iter().map(|dt| dt.ln()).collect();
    let log_err: Vec<f64> = strong_errors.iter().map(|e| e.ln()).collect();
    let (fitted_order, _, _) = linear_fit(&log_dt, &log_err);

    Ok(ConvergenceReport {
        scheme,
        dt_ladder,
        strong_errors,
        fitted_order,
        reference: reference.tag().to_string(),
        n_paths,
    })
}
