//! Holo-Hilbert spectral analysis.
//!
//! Each first-layer IMF `c_j` has an amplitude envelope `a_j`. Masking EMD splits `a_j`
//! into second-layer IMFs `c_jk` and a trend `Q_j`; direct quadrature of `c_jk` yields the
//! modulation amplitude `a_jk(t)` and frequency `ω_am(t)`, while the carrier frequency
//! `ω_c(t)` comes from `c_j` itself. Over a window of `T` samples every `(j, k, t)`
//! deposits `a_jk(t)² / T` into the `(ω_am, ω_c)` cell of a log-spaced grid, so the grid
//! total equals `Σ_jk mean_t a_jk²`.

use std::io::Write;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emd::{
    amplitude_envelope, amplitude_envelope_or_flat, direct_quadrature, emd_decompose, fmt_f64, masking_emd,
    zero_crossing_frequency, Decomposition, EmdError, InstantSeries, SiftOptions,
};
use crate::stats::{sample_std, weighted_percentile};

#[derive(Debug, Error, PartialEq)]
pub enum HhsaError {
    #[error("window {start}..{end} is empty or outside 0..{len}")]
    EmptyWindow { start: usize, end: usize, len: usize },
    #[error("spectrum has zero energy")]
    ZeroEnergy,
    #[error("{first} first-layer series for {second} second-layer components")]
    LayerMismatch { first: usize, second: usize },
    #[error(transparent)]
    Emd(#[from] EmdError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HhsaOptions {
    pub sift: SiftOptions,
    /// Mask frequency as a multiple of the envelope's zero-crossing frequency.
    pub mask_freq_factor: f64,
    /// Mask amplitude as a multiple of the envelope's standard deviation.
    pub mask_amp_factor: f64,
    /// Upper bound on the mask frequency in cycles per sample.
    pub max_mask_freq: f64,
    /// Bins per spectrum axis.
    pub bins: usize,
    /// Envelopes whose range is at most this fraction of their peak are treated as flat.
    pub flat_tolerance: f64,
}

impl Default for HhsaOptions {
    fn default() -> Self {
        Self {
            sift: SiftOptions::default(),
            mask_freq_factor: 1.0,
            mask_amp_factor: 1.6,
            max_mask_freq: 0.45,
            bins: 64,
            flat_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationMode {
    /// `c_jk`.
    pub samples: Vec<f64>,
    /// `a_jk`, phase and `ω_am`.
    pub inst: InstantSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeDecomposition {
    /// `a_j`.
    pub envelope: Vec<f64>,
    pub modes: Vec<ModulationMode>,
    /// `Q_j`.
    pub trend: Vec<f64>,
    /// Whether the envelope came from the constant fallback.
    pub flat_fallback: bool,
}

impl EnvelopeDecomposition {
    /// `Σ_k c_jk + Q_j`.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = self.trend.clone();
        for m in &self.modes {
            for (o, v) in out.iter_mut().zip(&m.samples) {
                *o += v;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondLayer {
    /// One entry per first-layer IMF, in order.
    pub components: Vec<EnvelopeDecomposition>,
}

/// Mask frequency and amplitude used for an envelope.
pub fn mask_parameters(env: &[f64], opts: &HhsaOptions) -> (f64, f64) {
    let f = (opts.mask_freq_factor * zero_crossing_frequency(env)).min(opts.max_mask_freq);
    (f, opts.mask_amp_factor * sample_std(env))
}

/// Second-layer masking EMD of one envelope.
pub fn decompose_envelope(env: &[f64], opts: &HhsaOptions) -> Result<EnvelopeDecomposition, HhsaError> {
    let peak = env.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let (lo, hi) = env.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let flat = env.is_empty() || hi - lo <= opts.flat_tolerance * peak;
    let d = if flat {
        Decomposition { imfs: Vec::new(), residual: env.to_vec() }
    } else {
        let (f, amp) = mask_parameters(env, opts);
        if f > 0.0 {
            masking_emd(env, f, amp, &opts.sift)?
        } else {
            emd_decompose(env, &opts.sift)?
        }
    };
    let modes = d
        .imfs
        .into_iter()
        .map(|c| {
            let inst = direct_quadrature(&c.samples, &opts.sift)?;
            Ok(ModulationMode { samples: c.samples, inst })
        })
        .collect::<Result<Vec<_>, EmdError>>()?;
    Ok(EnvelopeDecomposition { envelope: env.to_vec(), modes, trend: d.residual, flat_fallback: false })
}

/// Envelope of every first-layer IMF followed by [`decompose_envelope`].
pub fn second_layer(d: &Decomposition, opts: &HhsaOptions) -> Result<SecondLayer, HhsaError> {
    let components = d
        .imfs
        .par_iter()
        .map(|c| {
            let (env, fallback) = match amplitude_envelope(&c.samples, &opts.sift) {
                Ok(env) => (env, false),
                Err(_) => (amplitude_envelope_or_flat(&c.samples, &opts.sift), true),
            };
            let mut dec = decompose_envelope(&env, opts)?;
            dec.flat_fallback = fallback;
            Ok(dec)
        })
        .collect::<Result<Vec<_>, HhsaError>>()?;
    Ok(SecondLayer { components })
}

/// Log-spaced edges, `bins + 1` values from `lo` to `hi`.
pub fn log_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..=bins).map(|i| (a + (b - a) * i as f64 / bins as f64).exp()).collect()
}

/// Bin of `v`; values outside the edges fall into the end bins.
pub fn bin_index(edges: &[f64], v: f64) -> usize {
    let bins = edges.len() - 1;
    match edges.partition_point(|&e| e <= v) {
        0 => 0,
        p => (p - 1).min(bins - 1),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoloSpectrum {
    /// Sample range covered.
    pub window: Range<usize>,
    /// Modulation-frequency edges in cycles per sample.
    pub am_edges: Vec<f64>,
    /// Carrier-frequency edges in cycles per sample.
    pub c_edges: Vec<f64>,
    /// `energy[am_bin][c_bin]`.
    pub energy: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub window_start: usize,
    pub window_end: usize,
    pub samples: usize,
    pub bins: usize,
    pub frequency_unit: String,
    pub energy: String,
}

impl HoloSpectrum {
    pub fn total(&self) -> f64 {
        self.energy.iter().flatten().sum()
    }

    /// `(am_bin, c_bin, energy)` of the largest cell; the first one on ties.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for (i, row) in self.energy.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        best
    }

    /// Rows `c_edges,...` and `am_edges,...`, then one row per modulation bin.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut wr = csv::WriterBuilder::new().flexible(true).from_writer(w);
        let edge_row = |name: &str, e: &[f64]| {
            std::iter::once(name.to_string()).chain(e.iter().map(|v| fmt_f64(*v))).collect::<Vec<_>>()
        };
        wr.write_record(edge_row("c_edges", &self.c_edges))?;
        wr.write_record(edge_row("am_edges", &self.am_edges))?;
        for (i, row) in self.energy.iter().enumerate() {
            wr.write_record(edge_row(&format!("am{i}"), row))?;
        }
        wr.flush()
    }

    pub fn meta(&self) -> SpectrumMeta {
        SpectrumMeta {
            window_start: self.window.start,
            window_end: self.window.end,
            samples: self.window.len(),
            bins: self.energy.len(),
            frequency_unit: "cycles/day".into(),
            energy: "time-mean squared modulation amplitude per cell".into(),
        }
    }
}

fn check(sl: &SecondLayer, first: &[InstantSeries], window: &Range<usize>) -> Result<(), HhsaError> {
    if first.len() != sl.components.len() {
        return Err(HhsaError::LayerMismatch { first: first.len(), second: sl.components.len() });
    }
    let len = first.first().map(|s| s.frequency.len()).unwrap_or(0);
    if window.start >= window.end || window.end > len {
        return Err(HhsaError::EmptyWindow { start: window.start, end: window.end, len });
    }
    Ok(())
}

/// Time-integrated `(ω_am, ω_c)` spectrum over `window`, with `bins` log-spaced bins per
/// axis on `[1/T, 0.5]`.
pub fn holo_spectrum(
    sl: &SecondLayer,
    first: &[InstantSeries],
    window: Range<usize>,
    bins: usize,
) -> Result<HoloSpectrum, HhsaError> {
    check(sl, first, &window)?;
    let t_len = window.len() as f64;
    let edges = log_edges(1.0 / t_len, 0.5, bins.max(1));
    let mut energy = vec![vec![0.0; edges.len() - 1]; edges.len() - 1];
    for (comp, carrier) in sl.components.iter().zip(first) {
        for mode in &comp.modes {
            for t in window.clone() {
                let a = mode.inst.amplitude[t];
                let i = bin_index(&edges, mode.inst.frequency[t]);
                let j = bin_index(&edges, carrier.frequency[t]);
                energy[i][j] += a * a / t_len;
            }
        }
    }
    Ok(HoloSpectrum { window, am_edges: edges.clone(), c_edges: edges, energy })
}

/// Time-mean of `a_jk²` over `window` for every `(j, k)`.
pub fn modulation_energies(sl: &SecondLayer, window: Range<usize>) -> Vec<(usize, usize, f64)> {
    let t_len = window.len() as f64;
    let mut out = Vec::new();
    for (j, comp) in sl.components.iter().enumerate() {
        for (k, mode) in comp.modes.iter().enumerate() {
            let e: f64 = mode.inst.amplitude[window.clone()].iter().map(|a| a * a).sum::<f64>() / t_len;
            out.push((j, k, e));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeProfile {
    /// Largest spectrum cell.
    pub pame: f64,
    /// Energy-weighted 95th percentile of `ω_c`.
    pub wc95: f64,
    /// Energy-weighted 95th percentile of `ω_am`.
    pub wam95: f64,
}

/// PAME and energy-weighted 95th-percentile frequencies over the spectrum's window.
pub fn regime_profile(h: &HoloSpectrum, sl: &SecondLayer, first: &[InstantSeries]) -> Result<RegimeProfile, HhsaError> {
    check(sl, first, &h.window)?;
    let mut carrier = Vec::new();
    let mut modulation = Vec::new();
    for (comp, c) in sl.components.iter().zip(first) {
        for mode in &comp.modes {
            for t in h.window.clone() {
                let w = mode.inst.amplitude[t].powi(2);
                carrier.push((c.frequency[t], w));
                modulation.push((mode.inst.frequency[t], w));
            }
        }
    }
    let (_, _, pame) = h.argmax();
    let (Some(wc95), Some(wam95)) = (weighted_percentile(&carrier, 0.95), weighted_percentile(&modulation, 0.95))
    else {
        return Err(HhsaError::ZeroEnergy);
    };
    if !(pame > 0.0) {
        return Err(HhsaError::ZeroEnergy);
    }
    Ok(RegimeProfile { pame, wc95, wam95 })
}
