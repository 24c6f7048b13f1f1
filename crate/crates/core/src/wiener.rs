//! Wiener-process increments on a uniform grid, and exact coarsening of a
//! fine path onto coarser grids for coupled-path experiments.

use crate::grid::SimGrid;
use crate::numeric::compensated_sum;
use crate::rng::PathStream;
use std::fmt;

/// Increments ΔWᵈᵢ for `n_steps` steps and `dims` independent Wiener
/// processes.
///
/// Storage is column-major by noise dimension: column `d` occupies
/// `data[d * n_steps .. (d + 1) * n_steps]`.  Coarsening and coupling
/// iterate one dimension at a time, so each column is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementMatrix {
    grid: SimGrid,
    dims: usize,
    data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoarsenError {
    /// The coarsening factor must be a positive divisor of `n_steps`.
    IndivisibleGrid { n_steps: usize, factor: usize },
}

impl fmt::Display for CoarsenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoarsenError::IndivisibleGrid { n_steps, factor } => write!(
                f,
                "coarsening factor {factor} does not divide {n_steps} steps"
            ),
        }
    }
}

impl std::error::Error for CoarsenError {}

impl IncrementMatrix {
    pub fn grid(&self) -> &SimGrid {
        &self.grid
    }

    pub fn n_steps(&self) -> usize {
        self.grid.n_steps()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Contiguous increments of dimension `d`.
    pub fn column(&self, d: usize) -> &[f64] {
        assert!(d < self.dims, "dimension {d} out of range");
        let n = self.grid.n_steps();
        &self.data[d * n..(d + 1) * n]
    }

    /// ΔW for step `i`, dimension `d`.
    #[inline]
    pub fn at(&self, i: usize, d: usize) -> f64 {
        debug_assert!(i < self.grid.n_steps() && d < self.dims);
        self.data[d * self.grid.n_steps() + i]
    }

    /// Build from explicit columns (tests and coupling experiments).
    pub fn from_columns(grid: SimGrid, columns: &[&[f64]]) -> Self {
        let n = grid.n_steps();
        assert!(!columns.is_empty());
        assert!(columns.iter().all(|c| c.len() == n), "column length mismatch");
        let mut data = Vec::with_capacity(n * columns.len());
        for col in columns {
            data.extend_from_slice(col);
        }
        IncrementMatrix { grid, dims: columns.len(), data }
    }

    /// Single-column view of one dimension, as its own matrix (used to
    /// drive a 1-d system with a shared Brownian path).
    pub fn extract_column(&self, d: usize) -> IncrementMatrix {
        IncrementMatrix {
            grid: self.grid,
            dims: 1,
            data: self.column(d).to_vec(),
        }
    }
}

/// Draw `n_steps × dims` independent increments ΔW ~ N(0, dt).
///
/// Draw order is storage order: dimension 0 for all steps, then
/// dimension 1, and so on.  This order is part of the reproducibility
/// contract.
pub fn sample_wiener_increments(
    grid: SimGrid,
    stream: &mut PathStream,
    dims: usize,
) -> IncrementMatrix {
    assert!(dims >= 1, "need at least one noise dimension");
    let n = grid.n_steps();
    let sqrt_dt = grid.dt().sqrt();
    let mut data = Vec::with_capacity(n * dims);
    for _ in 0..dims {
        for _ in 0..n {
            data.push(sqrt_dt * stream.next_normal());
        }
    }
    IncrementMatrix { grid, dims, data }
}

/// Sum each run of `factor` consecutive fine increments into one coarse
/// increment, per dimension.  The coarse matrix describes the same
/// underlying Brownian path sampled on the coarser grid.
///
/// Group sums use compensated summation so that totals over the whole
/// path agree with the fine totals to the last bit in practice.
pub fn coarsen_increments(
    fine: &IncrementMatrix,
    factor: usize,
) -> Result<IncrementMatrix, CoarsenError> {
    let n = fine.n_steps();
    if factor == 0 || !n.is_multiple_of(factor) {
        return Err(CoarsenError::IndivisibleGrid { n_steps: n, factor });
    }
    if factor == 1 {
        return Ok(fine.clone());
    }
    let coarse_steps = n / factor;
    let grid = fine.grid.coarsened(factor);
    let mut data = Vec::with_capacity(coarse_steps * fine.dims);
    for d in 0..fine.dims {
        let col = fine.column(d);
        for j in 0..coarse_steps {
            data.push(compensated_sum(&col[j * factor..(j + 1) * factor]));
        }
    }
    Ok(IncrementMatrix { grid, dims: fine.dims, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_stream, RunSeed};

    fn grid(n: usize) -> SimGrid {
        SimGrid::new(0.0, n as f64 * 0.01, n).unwrap()
    }

    #[test]
    fn increment_moments_match_dt() {
        // 1e5 draws at dt = 0.01: mean within 4·sqrt(dt/n), variance within 5%.
        let g = SimGrid::new(0.0, 1000.0, 100_000).unwrap();
        let mut s = derive_stream(RunSeed::new(42, 0));
        let w = sample_wiener_increments(g, &mut s, 1);
        let col = w.column(0);
        let n = col.len() as f64;
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 4.0 * (0.01f64 / n).sqrt(), "mean {mean}");
        assert!((var - 0.01).abs() < 0.05 * 0.01, "var {var}");
    }

    #[test]
    fn path_sums_have_brownian_variance() {
        // Sum of increments over a path ~ N(0, T): check ensemble variance.
        let g = SimGrid::new(0.0, 2.0, 200).unwrap();
        let n_paths = 4000;
        let mut sums = Vec::with_capacity(n_paths);
        for p in 0..n_paths {
            let mut s = derive_stream(RunSeed::new(411, p as u64));
            let w = sample_wiener_increments(g, &mut s, 1);
            sums.push(w.column(0).iter().sum::<f64>());
        }
        let n = n_paths as f64;
        let mean = sums.iter().sum::<f64>() / n;
        let var = sums.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        // var of sample variance ≈ 2T²/n → sd ≈ 0.045 at T=2, n=4000
        assert!((var - 2.0).abs() < 0.2, "ensemble variance {var}");
        assert!(mean.abs() < 4.0 * (2.0f64 / n).sqrt(), "ensemble mean {mean}");
    }

    #[test]
    fn columns_are_uncorrelated() {
        let g = SimGrid::new(0.0, 1000.0, 100_000).unwrap();
        let mut s = derive_stream(RunSeed::new(42, 1));
        let w = sample_wiener_increments(g, &mut s, 3);
        for a in 0..3 {
            for b in (a + 1)..3 {
                let ca = w.column(a);
                let cb = w.column(b);
                let n = ca.len() as f64;
                let ma = ca.iter().sum::<f64>() / n;
                let mb = cb.iter().sum::<f64>() / n;
                let mut cov = 0.0;
                let mut va = 0.0;
                let mut vb = 0.0;
                for i in 0..ca.len() {
                    cov += (ca[i] - ma) * (cb[i] - mb);
                    va += (ca[i] - ma) * (ca[i] - ma);
                    vb += (cb[i] - mb) * (cb[i] - mb);
                }
                let corr = cov / (va.sqrt() * vb.sqrt());
                assert!(corr.abs() < 0.02, "corr({a},{b}) = {corr}");
            }
        }
    }

    #[test]
    fn coarsen_by_one_is_identity() {
        let g = grid(8);
        let mut s = derive_stream(RunSeed::new(1, 0));
        let w = sample_wiener_increments(g, &mut s, 2);
        let c = coarsen_increments(&w, 1).unwrap();
        assert_eq!(c, w);
    }

    #[test]
    fn coarsen_zeros_stay_zero() {
        let g = grid(12);
        let zeros = vec![0.0; 12];
        let w = IncrementMatrix::from_columns(g, &[&zeros]);
        let c = coarsen_increments(&w, 3).unwrap();
        assert!(c.column(0).iter().all(|&v| v == 0.0));
        assert_eq!(c.n_steps(), 4);
    }

    #[test]
    fn coarsen_rejects_indivisible_factor() {
        let g = grid(10);
        let mut s = derive_stream(RunSeed::new(1, 0));
        let w = sample_wiener_increments(g, &mut s, 1);
        assert!(matches!(
            coarsen_increments(&w, 3),
            Err(CoarsenError::IndivisibleGrid { n_steps: 10, factor: 3 })
        ));
        assert!(coarsen_increments(&w, 0).is_err());
    }

    /// Exact sum of a float list via a Shewchuk expansion (test oracle,
    /// independent of the double-double accumulator in `numeric`).
    fn exact_sum(values: &[f64]) -> f64 {
        let mut partials: Vec<f64> = Vec::new();
        for &v in values {
            let mut x = v;
            let mut keep = 0;
            for j in 0..partials.len() {
                let y = partials[j];
                let s = x + y;
                let bb = s - x;
                let err = (x - (s - bb)) + (y - bb);
                if err != 0.0 {
                    partials[keep] = err;
                    keep += 1;
                }
                x = s;
            }
            partials.truncate(keep);
            partials.push(x);
        }
        partials.iter().sum()
    }

    #[test]
    fn coarse_groups_are_correctly_rounded_sums() {
        // Each coarse increment equals the exactly-summed fine group,
        // rounded once; checked against an independent exact oracle.
        let g = grid(1024);
        let mut s = derive_stream(RunSeed::new(42, 5));
        let w = sample_wiener_increments(g, &mut s, 2);
        let factor = 8;
        let c = coarsen_increments(&w, factor).unwrap();
        for d in 0..2 {
            let col = w.column(d);
            for (j, &coarse) in c.column(d).iter().enumerate() {
                let oracle = exact_sum(&col[j * factor..(j + 1) * factor]);
                assert_eq!(coarse.to_bits(), oracle.to_bits(), "group {j} dim {d}");
            }
        }
    }

    #[test]
    fn coarse_total_matches_fine_total() {
        // The two totals describe the same Brownian span; they are each
        // correctly rounded, but the coarse values were themselves rounded
        // once, so the totals may differ by the final ulp.
        let g = grid(1024);
        let mut s = derive_stream(RunSeed::new(42, 5));
        let w = sample_wiener_increments(g, &mut s, 2);
        let c = coarsen_increments(&w, 8).unwrap();
        for d in 0..2 {
            let fine_total = compensated_sum(w.column(d));
            let coarse_total = compensated_sum(c.column(d));
            let ulp = fine_total.abs() * f64::EPSILON;
            assert!(
                (fine_total - coarse_total).abs() <= 2.0 * ulp,
                "totals differ: {fine_total} vs {coarse_total}"
            );
        }
    }
}
