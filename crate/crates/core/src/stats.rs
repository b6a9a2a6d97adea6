//! Small descriptive-statistics helpers shared across modules.
//!
//! All reductions sum in index order so results are reproducible bit-for-bit.

/// Arithmetic mean; `NaN` for an empty slice.
pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation with `n - 1` in the denominator. Zero for fewer than two values.
pub fn sample_std(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    let ss: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (x.len() - 1) as f64).sqrt()
}

/// Quantile of already sorted data by linear interpolation between order statistics
/// (`h = (n - 1) p + 1`, one-based).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Weighted percentile: the smallest value whose cumulative weight reaches `p` of the total.
///
/// Returns `None` when the total weight is not positive.
pub fn weighted_percentile(samples: &[(f64, f64)], p: f64) -> Option<f64> {
    let total: f64 = samples.iter().map(|&(_, w)| w).sum();
    if !(total > 0.0) {
        return None;
    }
    let mut sorted: Vec<(f64, f64)> = samples.iter().copied().filter(|&(_, w)| w > 0.0).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let target = p * total;
    let mut acc = 0.0;
    for &(v, w) in &sorted {
        acc += w;
        if acc >= target {
            return Some(v);
        }
    }
    sorted.last().map(|&(v, _)| v)
}

/// Two-sided standard-normal tail probability `2 (1 - Φ(|z|))`.
pub fn two_sided_normal_p(z: f64) -> f64 {
    use statrs::function::erf::erfc;
    // 2 (1 - Φ(|z|)) = erfc(|z| / √2)
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}
