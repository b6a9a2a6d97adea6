//! Extremum detection, sub-sample refinement and boundary mirroring.

use serde::{Deserialize, Serialize};

/// How a sampled extremum is moved off the sample grid before it becomes a spline knot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Refinement {
    /// Knot at the sample itself.
    None,
    /// Vertex of the parabola through the extremum and its two neighbours.
    Parabolic,
    /// Peak of the sinusoid through the extremum and its two neighbours; falls back to
    /// the parabola when the three samples do not determine a sinusoid.
    Sinusoid,
}

/// Indices of local maxima. A plateau counts once, at its midpoint.
pub fn local_maxima(x: &[f64]) -> Vec<usize> {
    let n = x.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if x[i] > x[i - 1] {
            let mut j = i;
            while j + 1 < n && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 < n && x[j + 1] < x[i] {
                out.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

pub fn local_minima(x: &[f64]) -> Vec<usize> {
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    local_maxima(&neg)
}

/// Number of sign changes, skipping exact zeros.
pub fn zero_crossings(x: &[f64]) -> usize {
    let mut prev = 0.0f64;
    let mut count = 0;
    for &v in x {
        if v != 0.0 {
            if prev != 0.0 && (v > 0.0) != (prev > 0.0) {
                count += 1;
            }
            prev = v;
        }
    }
    count
}

pub fn count_extrema(x: &[f64]) -> usize {
    local_maxima(x).len() + local_minima(x).len()
}

fn parabolic(x: &[f64], i: usize) -> (f64, f64) {
    let (a, b, c) = (x[i - 1], x[i], x[i + 1]);
    let denom = a - 2.0 * b + c;
    if denom == 0.0 {
        return (i as f64, b);
    }
    let delta = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
    (i as f64 + delta, b - 0.25 * (a - c) * delta)
}

fn sinusoid(x: &[f64], i: usize) -> Option<(f64, f64)> {
    // y(τ) = A cos(ω τ + φ) through τ = -1, 0, 1
    let (a, b, c) = (x[i - 1], x[i], x[i + 1]);
    if b == 0.0 {
        return None;
    }
    let cos_w = (a + c) / (2.0 * b);
    if !(cos_w > -1.0 && cos_w < 1.0) {
        return None;
    }
    let sin_w = (1.0 - cos_w * cos_w).sqrt();
    if sin_w < 1e-3 {
        return None;
    }
    let w = cos_w.acos();
    let a_sin_phi = -(c - a) / (2.0 * sin_w);
    let amp = (b * b + a_sin_phi * a_sin_phi).sqrt();
    if !amp.is_finite() || amp > 1.5 * b.abs() {
        return None;
    }
    let phi = (a_sin_phi / b).atan();
    let delta = (-phi / w).clamp(-1.0, 1.0);
    Some((i as f64 + delta, amp.copysign(b)))
}

/// Sub-sample position and value of the extremum at sample `i`.
pub fn refine(x: &[f64], i: usize, how: Refinement) -> (f64, f64) {
    if i == 0 || i + 1 >= x.len() {
        return (i as f64, x[i]);
    }
    match how {
        Refinement::None => (i as f64, x[i]),
        Refinement::Parabolic => parabolic(x, i),
        Refinement::Sinusoid => sinusoid(x, i).unwrap_or_else(|| parabolic(x, i)),
    }
}

/// Adds mirror images of the first and last `count` knots about the two end samples and
/// returns strictly increasing knots.
pub fn mirror_knots(knots: &[(f64, f64)], len: usize, count: usize) -> Vec<(f64, f64)> {
    let last = (len.max(1) - 1) as f64;
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(knots.len() + 2 * count);
    for &(p, v) in knots.iter().take(count).rev() {
        if p > 0.0 {
            out.push((-p, v));
        }
    }
    out.extend_from_slice(knots);
    for &(p, v) in knots.iter().rev().take(count) {
        if p < last {
            out.push((2.0 * last - p, v));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out.dedup_by(|b, a| b.0 - a.0 < 1e-9);
    out
}
