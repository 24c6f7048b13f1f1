//! Reproducible Monte Carlo ensembles.
//!
//! Paths are integrated in parallel, each from its own derived stream;
//! aggregation is a deterministic fold in path-index order on one thread,
//! so the serialized statistics are byte-identical for any worker count.

use crate::analysis::{for_each_path, AnalysisError};
use crate::grid::SimGrid;
use crate::numeric::{mean_variance, quantile_sorted, sort_finite};
use crate::rng::{derive_stream, RunSeed};
use crate::sde::{integrate, DiagonalSde, NegativityPolicy, Scheme};
use crate::wiener::sample_wiener_increments;
use serde::Serialize;

/// Per-component summary over the ensemble at each sample time.
#[derive(Debug, Clone, Serialize)]
pub struct ComponentStats {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub q05: Vec<f64>,
    pub q50: Vec<f64>,
    pub q95: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleStats {
    /// Times snapped to the nearest grid node.
    pub sample_times: Vec<f64>,
    /// One entry per state component.
    pub components: Vec<ComponentStats>,
    pub n_paths: usize,
    /// Fraction of paths with at least one negativity event, per component.
    pub negativity_fraction: Vec<f64>,
}

struct PathSample {
    /// values[k * dim + c]: component c at sample time k
    values: Vec<f64>,
    went_negative: Vec<bool>,
}

/// Integrate `n_paths` independent paths and summarize them at the given
/// sample times (snapped to grid nodes).
pub fn run_ensemble<S: DiagonalSde + Sync + ?Sized>(
    system: &S,
    initial: &[f64],
    grid: SimGrid,
    scheme: Scheme,
    policy: NegativityPolicy,
    n_paths: usize,
    master_seed: u64,
    sample_times: &[f64],
) -> Result<EnsembleStats, AnalysisError> {
    assert!(n_paths >= 1, "need at least one path");
    assert!(!sample_times.is_empty(), "need at least one sample time");
    let dim = system.dim();
    let sample_indices: Vec<usize> =
        sample_times.iter().map(|&t| grid.nearest_index(t)).collect();
    let snapped_times: Vec<f64> =
        sample_indices.iter().map(|&i| grid.time_at(i)).collect();

    let samples = for_each_path(n_paths, |path_index| {
        let mut stream = derive_stream(RunSeed::new(master_seed, path_index));
        let increments = sample_wiener_increments(grid, &mut stream, dim);
        let traj = integrate(system, initial, grid, &increments, scheme, policy)?;
        let mut values = Vec::with_capacity(sample_indices.len() * dim);
        for &i in &sample_indices {
            values.extend_from_slice(traj.state(i));
        }
        let mut went_negative = vec![false; dim];
        for ev in &traj.negativity_events {
            went_negative[ev.component] = true;
        }
        Ok(PathSample { values, went_negative })
    })?;

    // Deterministic aggregation in path order.
    let n_times = sample_indices.len();
    let mut components = Vec::with_capacity(dim);
    let mut scratch = vec![0.0; n_paths];
    for c in 0..dim {
        let mut stats = ComponentStats {
            mean: Vec::with_capacity(n_times),
            variance: Vec::with_capacity(n_times),
            q05: Vec::with_capacity(n_times),
            q50: Vec::with_capacity(n_times),
            q95: Vec::with_capacity(n_times),
        };
        for k in 0..n_times {
            for (p, sample) in samples.iter().enumerate() {
                scratch[p] = sample.values[k * dim + c];
            }
            let (mean, var) = mean_variance(&scratch);
            stats.mean.push(mean);
            stats.variance.push(var);
            sort_finite(&mut scratch);
            stats.q05.push(quantile_sorted(&scratch, 0.05));
            stats.q50.push(quantile_sorted(&scratch, 0.50));
            stats.q95.push(quantile_sorted(&scratch, 0.95));
        }
        components.push(stats);
    }

    let negativity_fraction = (0..dim)
        .map(|c| {
            samples.iter().filter(|s| s.went_negative[c]).count() as f64 / n_paths as f64
        })
        .collect();

    Ok(EnsembleStats {
        sample_times: snapped_times,
        components,
        n_paths,
        negativity_fraction,
    })
}
