//! Brock–Dechert–Scheinkman test of the iid null.
//!
//! Points are delay-embedded forward, `x_i = (x_i, x_{i+t}, ..., x_{i+(m-1)t})`, and
//! compared in the sup-norm. `C(1, r)` and the triple estimator `K` are taken on the full
//! scalar series; the `C(1, r)^m` term in the statistic uses the scalar points aligned
//! with the last embedding coordinate so both correlation sums cover the same `M` points.
//!
//! The variance is the standard BDS form
//! `σ² = 4 [K^m + 2 Σ_{j=1}^{m-1} K^{m-j} C^{2j} + (m-1)² C^{2m} - m² K C^{2m-2}]`.
//!
//! `K` averages the chained product `Θ(r - |x_i - x_j|) Θ(r - |x_j - x_k|)` over ordered
//! triples of distinct indices, which reduces to `Σ_j d_j (d_j - 1) / (N (N-1) (N-2))`
//! with `d_j` the number of neighbours of point `j`.
//!
//! All pair counts are integers, so the parallel loops are bit-identical to a
//! sequential pass.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::{sample_std, two_sided_normal_p};

#[derive(Debug, Error, PartialEq)]
pub enum BdsError {
    #[error("series too short: {embedded} embedded points (need at least {needed})")]
    SeriesTooShort { embedded: usize, needed: usize },
    #[error("degenerate variance (sigma = {0:e})")]
    DegenerateVariance(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BdsConfig {
    /// Embedding dimension, at least 2.
    pub m: usize,
    /// Distance threshold as a multiple of the sample standard deviation.
    pub eps_factor: f64,
    /// Index lag between embedding coordinates.
    pub t_lag: usize,
}

impl Default for BdsConfig {
    fn default() -> Self {
        Self { m: 2, eps_factor: 0.5, t_lag: 1 }
    }
}

impl BdsConfig {
    pub fn with_dimension(m: usize) -> Self {
        Self { m, ..Self::default() }
    }

    fn validate(&self) -> Result<(), BdsError> {
        if self.m < 2 {
            return Err(BdsError::InvalidConfig(format!("m = {} < 2", self.m)));
        }
        if !(self.eps_factor > 0.0) {
            return Err(BdsError::InvalidConfig(format!("eps_factor = {}", self.eps_factor)));
        }
        if self.t_lag < 1 {
            return Err(BdsError::InvalidConfig("t_lag = 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BdsResult {
    pub m: usize,
    pub epsilon: f64,
    pub c1: f64,
    pub cm: f64,
    pub k: f64,
    pub sigma: f64,
    pub statistic: f64,
    pub p_value: f64,
}

fn embedded_len(n: usize, m: usize, t_lag: usize) -> usize {
    n.saturating_sub((m - 1) * t_lag)
}

/// Number of embedded pairs `i < j` whose sup-norm distance is at most `r`.
fn close_pairs(x: &[f64], m: usize, r: f64, t_lag: usize, offset: usize, count: usize) -> u64 {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut c = 0u64;
            'pair: for j in (i + 1)..count {
                for k in 0..m {
                    let a = offset + i + k * t_lag;
                    let b = offset + j + k * t_lag;
                    if (x[a] - x[b]).abs() > r {
                        continue 'pair;
                    }
                }
                c += 1;
            }
            c
        })
        .sum()
}

/// Fraction of embedded point pairs within sup-norm distance `r`, pairs counted once.
pub fn correlation_integral(x: &[f64], m: usize, r: f64, t_lag: usize) -> Result<f64, BdsError> {
    if m == 0 || t_lag == 0 {
        return Err(BdsError::InvalidConfig("m and t_lag must be positive".into()));
    }
    let big_m = embedded_len(x.len(), m, t_lag);
    if big_m < 2 {
        return Err(BdsError::SeriesTooShort { embedded: big_m, needed: 2 });
    }
    let pairs = (big_m * (big_m - 1) / 2) as f64;
    Ok(close_pairs(x, m, r, t_lag, 0, big_m) as f64 / pairs)
}

/// Triple estimator `K(N, r)` on the scalar series.
pub fn k_estimate(x: &[f64], r: f64) -> Result<f64, BdsError> {
    let n = x.len();
    if n < 3 {
        return Err(BdsError::SeriesTooShort { embedded: n, needed: 3 });
    }
    let sum: u64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let d = x.iter().enumerate().filter(|&(j, v)| j != i && (x[i] - v).abs() <= r).count() as u64;
            d * d.saturating_sub(1)
        })
        .sum();
    Ok(sum as f64 / (n as f64 * (n - 1) as f64 * (n - 2) as f64))
}

/// Asymptotic standard deviation of `√M (C(m) - C(1)^m)` under the iid null.
pub fn bds_sigma(c: f64, k: f64, m: usize) -> f64 {
    let mi = m as i32;
    let mf = m as f64;
    let mut cross = 0.0;
    for j in 1..mi {
        cross += k.powi(mi - j) * c.powi(2 * j);
    }
    let var = 4.0 * (k.powi(mi) + 2.0 * cross + (mf - 1.0).powi(2) * c.powi(2 * mi) - mf * mf * k * c.powi(2 * mi - 2));
    var.max(0.0).sqrt()
}

/// Standardized BDS statistic with a two-sided normal p-value.
pub fn bds_statistic(x: &[f64], cfg: &BdsConfig) -> Result<BdsResult, BdsError> {
    cfg.validate()?;
    let n = x.len();
    let big_m = embedded_len(n, cfg.m, cfg.t_lag);
    if big_m < 3 {
        return Err(BdsError::SeriesTooShort { embedded: big_m, needed: 3 });
    }
    let epsilon = cfg.eps_factor * sample_std(x);

    let c1 = correlation_integral(x, 1, epsilon, 1)?;
    let k = k_estimate(x, epsilon)?;
    let cm = correlation_integral(x, cfg.m, epsilon, cfg.t_lag)?;
    let tail_offset = (cfg.m - 1) * cfg.t_lag;
    let c1_tail = close_pairs(x, 1, epsilon, 1, tail_offset, big_m) as f64 / (big_m * (big_m - 1) / 2) as f64;

    let sigma = bds_sigma(c1, k, cfg.m);
    if !(sigma > 1e-12) {
        return Err(BdsError::DegenerateVariance(sigma));
    }
    let statistic = (big_m as f64).sqrt() * (cm - c1_tail.powi(cfg.m as i32)) / sigma;
    Ok(BdsResult { m: cfg.m, epsilon, c1, cm, k, sigma, statistic, p_value: two_sided_normal_p(statistic) })
}

/// Tests at `m = 2` and `m = 3` with `ε = 0.5` sample standard deviations.
pub fn bds_suite(r: &[f64]) -> Vec<Result<BdsResult, BdsError>> {
    [2, 3].into_iter().map(|m| bds_statistic(r, &BdsConfig::with_dimension(m))).collect()
}

/// Human-readable p-value: `<0.001` below that level, otherwise three decimals.
pub fn format_p_value(p: f64) -> String {
    if p < 0.001 {
        "<0.001".to_string()
    } else {
        format!("{p:.3}")
    }
}
