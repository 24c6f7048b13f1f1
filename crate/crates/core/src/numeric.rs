//! Small numerical helpers shared across the crate.

/// Compensated summation with a double-double accumulator.
///
/// Each addition is an error-free TwoSum; the residual is carried in a
/// second float, so the running sum holds roughly 106 bits.  Totals are
/// correctly rounded for any realistic input, which makes group-wise sums
/// agree with whole-path sums to the last bit regardless of association.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut hi = 0.0f64;
    let mut lo = 0.0f64;
    for &v in values {
        // TwoSum(hi, v): s + e == hi + v exactly
        let s = hi + v;
        let bb = s - hi;
        let e = (hi - (s - bb)) + (v - bb);
        // fold the error into the low word and renormalize
        let f = lo + e;
        hi = s + f;
        lo = f - (hi - s);
    }
    hi
}

/// Ordinary least squares fit of `y = intercept + slope * x`.
///
/// Returns `(slope, intercept, r_squared)`. For a perfectly constant `y`
/// the slope is 0 and `r_squared` is reported as 1 (the fit is exact).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len(), "linear_fit: length mismatch");
    assert!(x.len() >= 2, "linear_fit: need at least two points");
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    assert!(sxx > 0.0, "linear_fit: degenerate abscissa");
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, intercept, r_squared)
}

/// Quantile of a sample by linear interpolation between order statistics
/// (the common "type 7" definition). `sorted` must be ascending.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    assert!((0.0..=1.0).contains(&p), "quantile level out of range");
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Sort a sample ascending. Inputs are produced by integrators that reject
/// non-finite states, so a total order exists.
pub fn sort_finite(values: &mut [f64]) {
    values.sort_by(|a, b| a.partial_cmp(b).expect("non-finite value in sample"));
}

/// Sample mean and unbiased variance in one deterministic pass order.
pub fn mean_variance(values: &[f64]) -> (f64, f64) {
    assert!(!values.is_empty());
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, ss / (n - 1.0))
}

/// Trapezoidal average of uniformly spaced samples over their full span.
pub fn trapezoid_average(values: &[f64]) -> f64 {
    assert!(values.len() >= 2, "trapezoid average needs at least two samples");
    let n = values.len();
    let interior = compensated_sum(&values[1..n - 1]);
    (0.5 * values[0] + interior + 0.5 * values[n - 1]) / (n - 1) as f64
}
