//! Monte Carlo check of the exponential-martingale identity
//! `E[e^{σ(W(t)−W(s))}] = e^{σ²(t−s)/2}` for `s ≤ t`.

use crate::rng::{derive_stream, RunSeed};
use serde::Serialize;

/// Two-sided 99% normal quantile Φ⁻¹(0.995).
const Z_99: f64 = 2.575_829_303_548_900_4;

#[derive(Debug, Clone, Serialize)]
pub struct MartingaleCheck {
    pub sigma: f64,
    pub elapsed: f64,
    pub n_paths: usize,
    pub estimate: f64,
    /// Analytic value e^{σ²(t−s)/2}.
    pub analytic: f64,
    /// 99% confidence interval around the Monte Carlo mean.
    pub ci_low: f64,
    pub ci_high: f64,
    /// Whether the analytic value lies inside the interval.
    pub pass: bool,
}

/// Estimate `E[e^{σ(W(t)−W(s))}]` from `n_paths` independent increments.
///
/// `W(t) − W(s) ~ N(0, t−s)`, so each path consumes exactly one normal
/// draw from its derived stream.
pub fn exp_martingale_check(
    sigma: f64,
    t: f64,
    s: f64,
    n_paths: usize,
    master_seed: u64,
) -> MartingaleCheck {
    assert!(s <= t, "requires s <= t");
    assert!(n_paths >= 2, "need at least two paths for a confidence interval");
    let elapsed = t - s;
    let sd_w = elapsed.sqrt();

    let mut values = Vec::with_capacity(n_paths);
    for p in 0..n_paths {
        let mut stream = derive_stream(RunSeed::new(master_seed, p as u64));
        values.push((sigma * sd_w * stream.next_normal()).exp());
    }
    let n = n_paths as f64;
    let estimate = values.iter().sum::<f64>() / n;
    let ss = values.iter().map(|v| (v - estimate) * (v - estimate)).sum::<f64>();
    let se = (ss / (n - 1.0)).sqrt() / n.sqrt();

    let analytic = (0.5 * sigma * sigma * elapsed).exp();
    let ci_low = estimate - Z_99 * se;
    let ci_high = estimate + Z_99 * se;
    let pass = analytic >= ci_low && analytic <= ci_high;

    MartingaleCheck {
        sigma,
        elapsed,
        n_paths,
        estimate,
        analytic,
        ci_low,
        ci_high,
        pass,
    }
}
