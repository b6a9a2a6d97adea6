//! Amplitude envelopes and direct-quadrature instantaneous frequency.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::extrema::{local_maxima, mirror_knots, refine};
use super::spline::NaturalSpline;
use super::{EmdError, SiftOptions};

/// Instantaneous amplitude, unwrapped phase (radians) and frequency (cycles per sample).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstantSeries {
    pub amplitude: Vec<f64>,
    pub phase: Vec<f64>,
    pub frequency: Vec<f64>,
    /// Samples whose negative frequency estimate was clamped to zero.
    pub clamped: usize,
    /// False when the last pass still had `|y|` above its spline envelope somewhere.
    pub converged: bool,
}

const NORM_TOL: f64 = 1e-6;
const MAX_NORM_ITERS: usize = 10;
/// Lower bound on envelope values, as a fraction of the current `max |y|`.
const ENV_FLOOR: f64 = 1e-12;

/// Spline through the maxima of `|c|`, floored at zero.
///
/// Each maximum is refined on the signed samples around it, so a sinusoidal lobe yields
/// its true peak even between samples.
pub fn amplitude_envelope(c: &[f64], opts: &SiftOptions) -> Result<Vec<f64>, EmdError> {
    let abs: Vec<f64> = c.iter().map(|v| v.abs()).collect();
    let peaks = local_maxima(&abs);
    if peaks.len() < 2 {
        return Err(EmdError::TooFewExtrema(peaks.len()));
    }
    let knots: Vec<(f64, f64)> = peaks
        .iter()
        .map(|&i| {
            let s = c[i].signum();
            let local = [s * c[i - 1], s * c[i], s * c[i + 1]];
            let (p, v) = refine(&local, 1, opts.refinement);
            (i as f64 + p - 1.0, v.abs())
        })
        .collect();
    let knots = mirror_knots(&knots, c.len(), opts.mirror_extrema);
    let (xs, ys): (Vec<f64>, Vec<f64>) = knots.into_iter().unzip();
    NaturalSpline::new(&xs, &ys)
        .map(|s| s.eval_grid(c.len()).into_iter().map(|v| v.max(0.0)).collect())
        .ok_or(EmdError::TooFewExtrema(peaks.len()))
}

/// [`amplitude_envelope`], or the constant `max |c|` when `|c|` has fewer than two maxima.
pub fn amplitude_envelope_or_flat(c: &[f64], opts: &SiftOptions) -> Vec<f64> {
    amplitude_envelope(c, opts).unwrap_or_else(|_| {
        let peak = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        vec![peak; c.len()]
    })
}

fn slope(y: &[f64], t: usize) -> f64 {
    let n = y.len();
    match (t, n) {
        (_, 0 | 1) => 0.0,
        (0, _) => y[1] - y[0],
        (t, n) if t == n - 1 => y[t] - y[t - 1],
        (t, _) => 0.5 * (y[t + 1] - y[t - 1]),
    }
}

fn unwrap(phase: &mut [f64]) {
    let mut offset = 0.0;
    for t in 1..phase.len() {
        let raw = phase[t] + offset;
        let mut d = raw - phase[t - 1];
        while d > PI {
            offset -= 2.0 * PI;
            d -= 2.0 * PI;
        }
        while d < -PI {
            offset += 2.0 * PI;
            d += 2.0 * PI;
        }
        phase[t] = phase[t - 1] + d;
    }
}

/// Direct-quadrature decomposition of an IMF.
///
/// `c` is divided by its amplitude envelope repeatedly until the spline envelope bounds
/// `|y|` to within `1e-6` (at most ten passes); the amplitude is the product of the
/// envelopes used. Each envelope is raised to `|y|` where it undershoots and capped at
/// the current `max |y|`, so every pass leaves `|y| <= 1` and the amplitude never
/// exceeds `max |c|`. The phase is
/// `atan2(q, y)` with `q = ±√(1 - y²)`, negative where `y` is rising, then unwrapped.
/// Frequency is the centred difference of the phase over `2π`, clamped at zero.
pub fn direct_quadrature(c: &[f64], opts: &SiftOptions) -> Result<InstantSeries, EmdError> {
    let n = c.len();
    if let Some(i) = c.iter().position(|v| !v.is_finite()) {
        return Err(EmdError::NonFiniteInput(i));
    }
    let peak = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if n == 0 || peak == 0.0 {
        return Ok(InstantSeries {
            amplitude: vec![0.0; n],
            phase: vec![0.0; n],
            frequency: vec![0.0; n],
            clamped: 0,
            converged: true,
        });
    }

    let mut y = c.to_vec();
    let mut amplitude = vec![1.0; n];
    let mut converged = false;
    for _ in 0..MAX_NORM_ITERS {
        let top = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let env = amplitude_envelope_or_flat(&y, opts);
        let mut dominated = true;
        for ((yv, av), e) in y.iter_mut().zip(amplitude.iter_mut()).zip(env) {
            let e = e.clamp(ENV_FLOOR * top, top);
            if yv.abs() > e * (1.0 + NORM_TOL) {
                dominated = false;
            }
            let e = e.max(yv.abs());
            *yv /= e;
            *av *= e;
        }
        if y.iter().chain(&amplitude).any(|v| !v.is_finite()) {
            return Err(EmdError::NormalizationFailure);
        }
        if dominated {
            converged = true;
            break;
        }
    }
    for v in y.iter_mut() {
        *v = v.clamp(-1.0, 1.0);
    }

    let mut phase: Vec<f64> = (0..n)
        .map(|t| {
            let q = (1.0 - y[t] * y[t]).max(0.0).sqrt();
            let q = if slope(&y, t) > 0.0 { -q } else { q };
            q.atan2(y[t])
        })
        .collect();
    unwrap(&mut phase);

    let mut clamped = 0;
    let frequency = (0..n)
        .map(|t| {
            let f = slope(&phase, t) / (2.0 * PI);
            if f < 0.0 {
                clamped += 1;
                0.0
            } else {
                f
            }
        })
        .collect();
    Ok(InstantSeries { amplitude, phase, frequency, clamped, converged })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SiftOptions {
        SiftOptions::default()
    }

    #[test]
    fn tone_envelope_and_frequency() {
        for &f in &[0.02, 0.05, 0.2, 0.3] {
            let x: Vec<f64> = (0..500).map(|t| 0.8 * (2.0 * PI * f * t as f64 + 0.3).cos()).collect();
            let env = amplitude_envelope(&x, &opts()).unwrap();
            for v in &env[20..480] {
                assert!((v - 0.8).abs() <= 0.02 * 0.8, "f={f} env={v}");
            }
            let dq = direct_quadrature(&x, &opts()).unwrap();
            assert!(dq.converged);
            let mid = &dq.frequency[20..480];
            let mean = mid.iter().sum::<f64>() / mid.len() as f64;
            assert!((mean - f).abs() <= 0.05 * f, "f={f} mean={mean}");
        }
    }

    #[test]
    fn am_envelope_tracks_modulation() {
        let n = 1000;
        let m: Vec<f64> = (0..n).map(|t| 1.0 + 0.5 * (2.0 * PI * 0.01 * t as f64).cos()).collect();
        let x: Vec<f64> = (0..n).map(|t| m[t] * (2.0 * PI * 0.2 * t as f64).cos()).collect();
        let env = amplitude_envelope(&x, &opts()).unwrap();
        let (lo, hi) = (n / 10, n - n / 10);
        let rmse =
            (env[lo..hi].iter().zip(&m[lo..hi]).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (hi - lo) as f64).sqrt();
        assert!(rmse < 0.05, "{rmse}");
    }

    #[test]
    fn unit_tone_amplitude_and_frequency() {
        let n = 1000;
        let x: Vec<f64> = (0..n).map(|t| (2.0 * PI * 0.1 * t as f64).cos()).collect();
        let dq = direct_quadrature(&x, &opts()).unwrap();
        for t in n / 10..n - n / 10 {
            assert!((dq.amplitude[t] - 1.0).abs() <= 0.02);
            assert!((dq.frequency[t] - 0.1).abs() <= 0.005, "{t} {}", dq.frequency[t]);
        }
    }

    #[test]
    fn scaling_is_homogeneous() {
        let x: Vec<f64> = (0..600).map(|t| (1.0 + 0.3 * (0.02 * t as f64).sin()) * (0.9 * t as f64).cos()).collect();
        let k = 3.7;
        let xk: Vec<f64> = x.iter().map(|v| k * v).collect();
        let a = direct_quadrature(&x, &opts()).unwrap();
        let b = direct_quadrature(&xk, &opts()).unwrap();
        for t in 0..x.len() {
            assert!((b.amplitude[t] - k * a.amplitude[t]).abs() <= 1e-9 * k * a.amplitude[t].max(1.0));
            assert!((b.frequency[t] - a.frequency[t]).abs() <= 1e-6);
        }
    }

    #[test]
    fn chirp_frequency_tracks_analytic() {
        let n = 2000;
        let (f0, f1) = (0.05, 0.15);
        let rate = (f1 - f0) / n as f64;
        let x: Vec<f64> = (0..n)
            .map(|t| {
                let t = t as f64;
                (2.0 * PI * (f0 * t + 0.5 * rate * t * t)).cos()
            })
            .collect();
        let dq = direct_quadrature(&x, &opts()).unwrap();
        let (lo, hi) = (n / 10, n - n / 10);
        let rel: f64 = (lo..hi)
            .map(|t| {
                let truth = f0 + rate * t as f64;
                (dq.frequency[t] - truth).abs() / truth
            })
            .sum::<f64>()
            / (hi - lo) as f64;
        assert!(rel < 0.10, "{rel}");
    }

    #[test]
    fn zero_imf() {
        let dq = direct_quadrature(&[0.0; 32], &opts()).unwrap();
        assert!(dq.amplitude.iter().all(|&v| v == 0.0));
        assert!(dq.frequency.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn envelope_needs_two_peaks() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        assert_eq!(amplitude_envelope(&x, &opts()), Err(EmdError::TooFewExtrema(0)));
        assert_eq!(amplitude_envelope_or_flat(&x, &opts()), vec![19.0; 20]);
    }

    #[test]
    fn unwrap_removes_jumps() {
        let mut p = vec![3.0, -3.0, -2.5];
        unwrap(&mut p);
        assert!((p[1] - (2.0 * PI - 3.0)).abs() < 1e-12);
        assert!(p.windows(2).all(|w| w[1] > w[0]));
    }
}
