//! Mechanized theorem-condition checks and statistical estimators.

mod convergence;
mod coupling;
mod ensemble;
mod ergodicity;
mod lyapunov;
mod martingale;
mod stability;

pub use convergence::{strong_convergence, ConvergenceReport, ReferenceSolution};
pub use coupling::{coupling_experiment, CouplingReport};
pub use ensemble::{run_ensemble, ComponentStats, EnsembleStats};
pub use ergodicity::{check_ergodicity, ellipsoid_time_average, ErgodicVerdict, ErgodicityReport};
pub use lyapunov::{estimate_lyapunov, time_average, LyapunovEstimate};
pub use martingale::{exp_martingale_check, MartingaleCheck};
pub use stability::{check_stability, GammaChoice, GammaSource, StabilityReport, StabilityVerdict};

use crate::sde::SdeError;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    /// The fitted tail of `ln(y+z)` contained no positive values.
    DegenerateTail,
    /// A path's integration failed; carries the failing path index.
    Path { path_index: u64, source: SdeError },
    /// A grid/ladder construction was impossible (divisibility).
    IndivisibleGrid { n_steps: usize, factor: usize },
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisError::DegenerateTail => {
                write!(f, "y+z is zero or negative throughout the fitted tail")
            }
            AnalysisError::Path { path_index, source } => {
                write!(f, "path {path_index}: {source}")
            }
            AnalysisError::IndivisibleGrid { n_steps, factor } => {
                write!(f, "factor {factor} does not divide {n_steps} steps")
            }
        }
    }
}

impl std::error::Error for AnalysisError {}

/// Number of worker threads: `HBVSIM_THREADS` if set, otherwise the
/// available parallelism. Results are identical for every setting.
pub fn worker_threads() -> usize {
    if let Ok(v) = std::env::var("HBVSIM_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                return n;
            }
        }
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Run `work(path_index)` for every path, distributing contiguous chunks
/// across worker threads.  Results come back indexed by path, so the
/// aggregation the callers perform is independent of the thread count.
/// The error reported is the one with the smallest path index.
pub(crate) fn for_each_path<T, F>(n_paths: usize, work: F) -> Result<Vec<T>, AnalysisError>
where
    T: Send,
    F: Fn(u64) -> Result<T, SdeError> + Sync,
{
    assert!(n_paths >= 1, "need at least one path");
    let threads = worker_threads().min(n_paths);
    let mut slots: Vec<Option<Result<T, SdeError>>> = Vec::with_capacity(n_paths);
    slots.resize_with(n_paths, || None);

    if threads == 1 {
        for (i, slot) in slots.iter_mut().enumerate() {
            *slot = Some(work(i as u64));
        }
    } else {
        let chunk = n_paths.div_ceil(threads);
        std::thread::scope(|scope| {
            for (c, chunk_slots) in slots.chunks_mut(chunk).enumerate() {
                let work = &work;
                scope.spawn(move || {
                    let base = c * chunk;
                    for (off, slot) in chunk_slots.iter_mut().enumerate() {
                        *slot = Some(work((base + off) as u64));
                    }
                });
            }
        });
    }

    let mut out = Vec::with_capacity(n_paths);
    for (i, slot) in slots.into_iter().enumerate() {
        match slot.expect("worker filled every slot") {
            Ok(v) => out.push(v),
            Err(source) => {
                return Err(AnalysisError::Path { path_index: i as u64, source })
            }
        }
    }
    Ok(out)
}
