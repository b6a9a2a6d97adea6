//! Empirical mode decomposition.
//!
//! Sifting subtracts the mean of natural-cubic-spline envelopes through the maxima and
//! minima until the S-number criterion holds: `s_number` consecutive sifts with unchanged
//! extremum and zero-crossing counts that differ by at most one. Two extrema at each end
//! are mirrored about the end samples before every spline fit. Extracted IMFs are
//! subtracted from the running residual, so `Σ imfs + residual` reproduces the input up
//! to rounding.
//!
//! [`masking_emd`] separates intermittent oscillations by averaging the first IMF of
//! `x + s` and `x - s` for a sinusoidal mask `s`.

mod dq;
pub mod extrema;
pub mod spline;

use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dq::{amplitude_envelope, amplitude_envelope_or_flat, direct_quadrature, InstantSeries};
pub use extrema::Refinement;

use extrema::{count_extrema, local_maxima, local_minima, mirror_knots, refine, zero_crossings};
use spline::NaturalSpline;

#[derive(Debug, Error, PartialEq)]
pub enum EmdError {
    #[error("signal too short: {0} samples (need at least 8)")]
    TooShort(usize),
    #[error("non-finite value at sample {0}")]
    NonFiniteInput(usize),
    #[error("fewer than two maxima of |c| ({0} found)")]
    TooFewExtrema(usize),
    #[error("envelope normalization diverged")]
    NormalizationFailure,
    #[error("invalid mask: {0}")]
    InvalidMask(String),
    #[error("decomposition csv: {0}")]
    Format(String),
}

pub const MIN_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SiftOptions {
    /// Consecutive sifts with stable extremum/zero-crossing counts required to accept an IMF.
    pub s_number: usize,
    /// Hard cap on sifts per IMF.
    pub max_sifts: usize,
    /// Cap on extracted IMFs.
    pub max_imfs: usize,
    /// Extrema mirrored at each end before spline fitting.
    pub mirror_extrema: usize,
    pub refinement: Refinement,
    /// Candidate IMFs whose peak is at most this fraction of the input's peak end the
    /// decomposition; they are left in the residual.
    pub negligible: f64,
}

impl Default for SiftOptions {
    fn default() -> Self {
        Self {
            s_number: 4,
            max_sifts: 50,
            max_imfs: 16,
            mirror_extrema: 2,
            refinement: Refinement::Sinusoid,
            negligible: 1e-10,
        }
    }
}

/// An intrinsic mode function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Imf {
    pub samples: Vec<f64>,
}

impl Imf {
    pub fn new(samples: Vec<f64>) -> Self {
        Self { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `|#extrema - #zero crossings| <= 1`.
    pub fn is_balanced(&self) -> bool {
        count_extrema(&self.samples).abs_diff(zero_crossings(&self.samples)) <= 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    /// Fastest first.
    pub imfs: Vec<Imf>,
    pub residual: Vec<f64>,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.residual.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residual.is_empty()
    }

    /// `Σ imfs + residual`.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = self.residual.clone();
        for imf in &self.imfs {
            for (o, v) in out.iter_mut().zip(&imf.samples) {
                *o += v;
            }
        }
        out
    }

    /// Multiplies every IMF and the residual by `k`.
    pub fn scaled(&self, k: f64) -> Decomposition {
        Decomposition {
            imfs: self.imfs.iter().map(|c| Imf::new(c.samples.iter().map(|v| v * k).collect())).collect(),
            residual: self.residual.iter().map(|v| v * k).collect(),
        }
    }

    /// One column per IMF (`imf1`, `imf2`, ...) plus `residual`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.imfs.len()).map(|j| format!("imf{j}")).collect();
        header.push("residual".into());
        wr.write_record(&header)?;
        for t in 0..self.len() {
            let row = self.imfs.iter().map(|c| c.samples[t]).chain(std::iter::once(self.residual[t])).map(fmt_f64);
            wr.write_record(row)?;
        }
        wr.flush()
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, EmdError> {
        let mut rd = csv::Reader::from_reader(r);
        let width = rd.headers().map_err(|e| EmdError::Format(e.to_string()))?.len();
        if width == 0 {
            return Err(EmdError::Format("empty header".into()));
        }
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); width];
        for rec in rd.records() {
            let rec = rec.map_err(|e| EmdError::Format(e.to_string()))?;
            for (c, field) in cols.iter_mut().zip(rec.iter()) {
                c.push(field.parse().map_err(|_| EmdError::Format(format!("bad number {field:?}")))?);
            }
        }
        let residual = cols.pop().unwrap_or_default();
        Ok(Self { imfs: cols.into_iter().map(Imf::new).collect(), residual })
    }
}

/// Machine-file float rendering: 17 significant digits, round-trips exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn peak_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

fn check_input(x: &[f64]) -> Result<(), EmdError> {
    if x.len() < MIN_LEN {
        return Err(EmdError::TooShort(x.len()));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(EmdError::NonFiniteInput(i));
    }
    Ok(())
}

fn envelope(x: &[f64], idx: &[usize], opts: &SiftOptions) -> Option<Vec<f64>> {
    let knots: Vec<(f64, f64)> = idx.iter().map(|&i| refine(x, i, opts.refinement)).collect();
    let knots = mirror_knots(&knots, x.len(), opts.mirror_extrema);
    let (xs, ys): (Vec<f64>, Vec<f64>) = knots.into_iter().unzip();
    NaturalSpline::new(&xs, &ys).map(|s| s.eval_grid(x.len()))
}

/// Sifts one IMF out of `x`. Returns `None` when `x` lacks a maximum or a minimum.
pub fn sift(x: &[f64], opts: &SiftOptions) -> Option<Vec<f64>> {
    let mut h = x.to_vec();
    let mut stable = 0;
    let mut prev: Option<(usize, usize)> = None;
    let mut sifted = false;
    for _ in 0..opts.max_sifts {
        let maxima = local_maxima(&h);
        let minima = local_minima(&h);
        if maxima.is_empty() || minima.is_empty() {
            break;
        }
        let (Some(upper), Some(lower)) = (envelope(&h, &maxima, opts), envelope(&h, &minima, opts)) else {
            break;
        };
        for ((v, u), l) in h.iter_mut().zip(&upper).zip(&lower) {
            *v -= 0.5 * (u + l);
        }
        sifted = true;
        let counts = (count_extrema(&h), zero_crossings(&h));
        if counts.0.abs_diff(counts.1) <= 1 && prev == Some(counts) {
            stable += 1;
        } else {
            stable = 0;
        }
        prev = Some(counts);
        if stable >= opts.s_number {
            break;
        }
    }
    sifted.then_some(h)
}

/// Decomposes `x` into IMFs (fastest first) and a residual.
///
/// Extraction stops once the residual has fewer than two extrema, the next IMF is
/// negligible, or `max_imfs` IMFs exist.
pub fn emd_decompose(x: &[f64], opts: &SiftOptions) -> Result<Decomposition, EmdError> {
    check_input(x)?;
    let mut residual = x.to_vec();
    let mut imfs = Vec::new();
    let floor = opts.negligible * peak_abs(x);
    while imfs.len() < opts.max_imfs && count_extrema(&residual) >= 2 {
        let Some(imf) = sift(&residual, opts) else { break };
        if peak_abs(&imf) <= floor {
            break;
        }
        for (r, c) in residual.iter_mut().zip(&imf) {
            *r -= c;
        }
        imfs.push(Imf::new(imf));
    }
    Ok(Decomposition { imfs, residual })
}

fn mask(len: usize, freq: f64, amp: f64) -> Vec<f64> {
    (0..len).map(|t| amp * (2.0 * PI * freq * t as f64).sin()).collect()
}

/// Masking EMD.
///
/// Level `k` uses a mask `mask_amp · sin(2π f_k t)` with `f_0 = mask_freq` and
/// `f_{k+1} = f_k / 2`; the IMF is the average of the first IMFs of `r + s` and `r - s`
/// for the current remainder `r`. Once the mask would complete fewer than two cycles the
/// remainder is finished with plain EMD.
pub fn masking_emd(x: &[f64], mask_freq: f64, mask_amp: f64, opts: &SiftOptions) -> Result<Decomposition, EmdError> {
    check_input(x)?;
    if !(mask_freq > 0.0 && mask_freq < 0.5) {
        return Err(EmdError::InvalidMask(format!("frequency {mask_freq} outside (0, 0.5)")));
    }
    if !mask_amp.is_finite() {
        return Err(EmdError::InvalidMask(format!("amplitude {mask_amp}")));
    }
    let n = x.len();
    let mut residual = x.to_vec();
    let mut imfs = Vec::new();
    let mut freq = mask_freq;
    let floor = opts.negligible * peak_abs(x);
    while imfs.len() < opts.max_imfs && count_extrema(&residual) >= 2 {
        if freq * (n as f64) < 2.0 || mask_amp == 0.0 {
            let rest = emd_decompose(&residual, &SiftOptions { max_imfs: opts.max_imfs - imfs.len(), ..*opts })?;
            imfs.extend(rest.imfs);
            residual = rest.residual;
            break;
        }
        let s = mask(n, freq, mask_amp);
        let plus: Vec<f64> = residual.iter().zip(&s).map(|(r, m)| r + m).collect();
        let minus: Vec<f64> = residual.iter().zip(&s).map(|(r, m)| r - m).collect();
        let (Some(a), Some(b)) = (sift(&plus, opts), sift(&minus, opts)) else { break };
        let imf: Vec<f64> = a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect();
        if peak_abs(&imf) <= floor {
            break;
        }
        for (r, c) in residual.iter_mut().zip(&imf) {
            *r -= c;
        }
        imfs.push(Imf::new(imf));
        freq *= 0.5;
    }
    Ok(Decomposition { imfs, residual })
}

/// Mean frequency in cycles per sample from the zero crossings of `x - mean(x)`.
pub fn zero_crossing_frequency(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = crate::stats::mean(x);
    let centered: Vec<f64> = x.iter().map(|v| v - m).collect();
    zero_crossings(&centered) as f64 / (2.0 * x.len() as f64)
}
