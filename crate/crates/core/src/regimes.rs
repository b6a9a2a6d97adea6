//! Instantaneous-energy regimes.
//!
//! `E_raw(t) = Σ_j a_j(t)²` over the direct-quadrature amplitudes of the first-layer IMFs,
//! normalized by its maximum. With `μ`, `σ` the sample mean and standard deviation of the
//! normalized series, a day is Extreme when `E > μ + bσ`, High when
//! `μ + aσ < E <= μ + bσ` and Normal otherwise. A calendar year belongs to a regime when
//! at least one of its days carries that label; a year is kept only in its most severe
//! regime.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emd::{direct_quadrature, fmt_f64, Decomposition, EmdError, InstantSeries, SiftOptions};
use crate::stats::{mean, sample_std};

#[derive(Debug, Error, PartialEq)]
pub enum RegimeError {
    #[error("decomposition has no IMFs")]
    EmptyDecomposition,
    #[error("instantaneous energy is zero everywhere")]
    AllZeroEnergy,
    #[error("invalid threshold pair a = {a}, b = {b} (need a < b)")]
    InvalidGrid { a: f64, b: f64 },
    #[error("{dates} dates for {values} samples")]
    LengthMismatch { dates: usize, values: usize },
    #[error(transparent)]
    Emd(#[from] EmdError),
    #[error("labeling csv: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Normal,
    High,
    Extreme,
}

impl Regime {
    /// Most severe first.
    pub const BY_SEVERITY: [Regime; 3] = [Regime::Extreme, Regime::High, Regime::Normal];

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Normal => "Normal",
            Regime::High => "High",
            Regime::Extreme => "Extreme",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" => Ok(Regime::Normal),
            "high" => Ok(Regime::High),
            "extreme" => Ok(Regime::Extreme),
            other => Err(format!("unknown regime {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySeries {
    pub dates: Vec<NaiveDate>,
    /// Max-normalized energy, `max(e) = 1`.
    pub e: Vec<f64>,
    pub mu: f64,
    pub sigma: f64,
}

impl EnergySeries {
    /// Series from values that are already max-normalized, such as a stored labeling.
    pub fn from_normalized(dates: Vec<NaiveDate>, e: Vec<f64>) -> Self {
        Self { mu: mean(&e), sigma: sample_std(&e), dates, e }
    }
}

/// Normalized energy from per-IMF instantaneous amplitudes.
pub fn energy_from_amplitudes(dates: &[NaiveDate], amplitudes: &[&[f64]]) -> Result<EnergySeries, RegimeError> {
    if amplitudes.is_empty() {
        return Err(RegimeError::EmptyDecomposition);
    }
    let n = dates.len();
    let mut raw = vec![0.0; n];
    for a in amplitudes {
        if a.len() != n {
            return Err(RegimeError::LengthMismatch { dates: n, values: a.len() });
        }
        for (r, v) in raw.iter_mut().zip(a.iter()) {
            *r += v * v;
        }
    }
    let peak = raw.iter().copied().fold(0.0f64, f64::max);
    if !(peak > 0.0) {
        return Err(RegimeError::AllZeroEnergy);
    }
    let e: Vec<f64> = raw.iter().map(|v| v / peak).collect();
    Ok(EnergySeries { dates: dates.to_vec(), mu: mean(&e), sigma: sample_std(&e), e })
}

/// Direct-quadrature analysis of every IMF, in order.
pub fn instantaneous_series(d: &Decomposition, opts: &SiftOptions) -> Result<Vec<InstantSeries>, EmdError> {
    d.imfs.par_iter().map(|c| direct_quadrature(&c.samples, opts)).collect()
}

/// Energy of a first-layer decomposition whose samples align with `dates`.
pub fn instantaneous_energy(
    dates: &[NaiveDate],
    d: &Decomposition,
    opts: &SiftOptions,
) -> Result<EnergySeries, RegimeError> {
    if d.imfs.is_empty() {
        return Err(RegimeError::EmptyDecomposition);
    }
    let inst = instantaneous_series(d, opts)?;
    let amps: Vec<&[f64]> = inst.iter().map(|s| s.amplitude.as_slice()).collect();
    energy_from_amplitudes(dates, &amps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeLabeling {
    pub dates: Vec<NaiveDate>,
    pub energy: Vec<f64>,
    pub labels: Vec<Regime>,
    pub tau1: f64,
    pub tau2: f64,
}

impl RegimeLabeling {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn count(&self, regime: Regime) -> usize {
        self.labels.iter().filter(|&&l| l == regime).count()
    }

    /// `date,energy,label`.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["date", "energy", "label"])?;
        for ((d, e), l) in self.dates.iter().zip(&self.energy).zip(&self.labels) {
            wr.write_record([d.to_string(), fmt_f64(*e), l.to_string()])?;
        }
        wr.flush()
    }

    /// Reads `date,energy,label` rows; thresholds are not stored in the file and come back as NaN.
    pub fn read_csv<R: Read>(r: R) -> Result<Self, RegimeError> {
        let mut rd = csv::Reader::from_reader(r);
        let mut out = RegimeLabeling {
            dates: Vec::new(),
            energy: Vec::new(),
            labels: Vec::new(),
            tau1: f64::NAN,
            tau2: f64::NAN,
        };
        for rec in rd.records() {
            let rec = rec.map_err(|e| RegimeError::Format(e.to_string()))?;
            let field = |i: usize| rec.get(i).ok_or_else(|| RegimeError::Format("short row".into()));
            out.dates.push(field(0)?.parse().map_err(|e| RegimeError::Format(format!("{e}")))?);
            out.energy.push(field(1)?.parse().map_err(|e| RegimeError::Format(format!("{e}")))?);
            out.labels.push(field(2)?.parse().map_err(RegimeError::Format)?);
        }
        Ok(out)
    }
}

pub const BASELINE: (f64, f64) = (1.0, 6.0);

/// Three-band labeling at `τ1 = μ + aσ`, `τ2 = μ + bσ`.
pub fn classify_regimes(e: &EnergySeries, a: f64, b: f64) -> Result<RegimeLabeling, RegimeError> {
    if !(a < b) {
        return Err(RegimeError::InvalidGrid { a, b });
    }
    let tau1 = e.mu + a * e.sigma;
    let tau2 = e.mu + b * e.sigma;
    let labels =
        e.e.iter()
            .map(|&v| {
                if v > tau2 {
                    Regime::Extreme
                } else if v > tau1 {
                    Regime::High
                } else {
                    Regime::Normal
                }
            })
            .collect();
    Ok(RegimeLabeling { dates: e.dates.clone(), energy: e.e.clone(), labels, tau1, tau2 })
}

/// Disjoint per-regime calendar-year sets.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeYears {
    pub extreme: BTreeSet<i32>,
    pub high: BTreeSet<i32>,
    pub normal: BTreeSet<i32>,
}

impl RegimeYears {
    pub fn get(&self, r: Regime) -> &BTreeSet<i32> {
        match r {
            Regime::Extreme => &self.extreme,
            Regime::High => &self.high,
            Regime::Normal => &self.normal,
        }
    }

    fn get_mut(&mut self, r: Regime) -> &mut BTreeSet<i32> {
        match r {
            Regime::Extreme => &mut self.extreme,
            Regime::High => &mut self.high,
            Regime::Normal => &mut self.normal,
        }
    }

    /// The regime a year was assigned to, if any.
    pub fn regime_of(&self, year: i32) -> Option<Regime> {
        Regime::BY_SEVERITY.into_iter().find(|&r| self.get(r).contains(&year))
    }
}

pub fn regime_years(l: &RegimeLabeling) -> RegimeYears {
    let mut worst: BTreeMap<i32, Regime> = BTreeMap::new();
    for (d, &lab) in l.dates.iter().zip(&l.labels) {
        let slot = worst.entry(d.year()).or_insert(lab);
        *slot = (*slot).max(lab);
    }
    let mut out = RegimeYears::default();
    for (y, r) in worst {
        out.get_mut(r).insert(y);
    }
    out
}

/// `|A ∩ B| / |A ∪ B|`, and 1 when both are empty.
pub fn jaccard(a: &BTreeSet<i32>, b: &BTreeSet<i32>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

pub const DEFAULT_GRID_A: [f64; 3] = [0.75, 1.0, 1.25];
pub const DEFAULT_GRID_B: [f64; 3] = [4.5, 6.0, 7.5];

/// The 3×3 perturbation grid around the baseline.
pub fn default_grid() -> Vec<(f64, f64)> {
    DEFAULT_GRID_A.iter().flat_map(|&a| DEFAULT_GRID_B.iter().map(move |&b| (a, b))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeComparison {
    pub years: BTreeSet<i32>,
    /// Against the baseline set for the same regime.
    pub jaccard: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityEntry {
    pub a: f64,
    pub b: f64,
    pub extreme: RegimeComparison,
    pub high: RegimeComparison,
    pub normal: RegimeComparison,
}

impl SensitivityEntry {
    pub fn get(&self, r: Regime) -> &RegimeComparison {
        match r {
            Regime::Extreme => &self.extreme,
            Regime::High => &self.high,
            Regime::Normal => &self.normal,
        }
    }

    pub fn years(&self) -> RegimeYears {
        RegimeYears {
            extreme: self.extreme.years.clone(),
            high: self.high.years.clone(),
            normal: self.normal.years.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub baseline: RegimeYears,
    pub entries: Vec<SensitivityEntry>,
}

impl SensitivityReport {
    pub fn entry(&self, a: f64, b: f64) -> Option<&SensitivityEntry> {
        self.entries.iter().find(|e| e.a == a && e.b == b)
    }
}

/// Regime years for every `(a, b)` in `grid`, compared with the `(1, 6)` baseline.
///
/// The baseline cell is always present; it is appended when `grid` omits it.
pub fn threshold_sensitivity(e: &EnergySeries, grid: &[(f64, f64)]) -> Result<SensitivityReport, RegimeError> {
    if let Some(&(a, b)) = grid.iter().find(|(a, b)| !(a < b)) {
        return Err(RegimeError::InvalidGrid { a, b });
    }
    let mut cells = grid.to_vec();
    if !cells.contains(&BASELINE) {
        cells.push(BASELINE);
    }
    let baseline = regime_years(&classify_regimes(e, BASELINE.0, BASELINE.1)?);
    let entries = cells
        .par_iter()
        .map(|&(a, b)| {
            let years = regime_years(&classify_regimes(e, a, b)?);
            let cmp = |r: Regime| RegimeComparison {
                years: years.get(r).clone(),
                jaccard: jaccard(years.get(r), baseline.get(r)),
            };
            Ok(SensitivityEntry {
                a,
                b,
                extreme: cmp(Regime::Extreme),
                high: cmp(Regime::High),
                normal: cmp(Regime::Normal),
            })
        })
        .collect::<Result<Vec<_>, RegimeError>>()?;
    Ok(SensitivityReport { baseline, entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum YearSource {
    /// Every year is common to all indices.
    Intersection,
    /// Common years padded with the most frequent remaining years.
    Padded,
    /// No common year; the most frequent years alone.
    Frequency,
    /// Set explicitly rather than derived.
    Configured,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepresentativeYears {
    pub years: Vec<i32>,
    pub source: YearSource,
}

/// Years shared by a group of indices for one regime.
///
/// The result is the intersection of the group's year sets. When it holds fewer than
/// `per_regime_count` years it is filled up to that size with the remaining years ranked
/// by how many indices list them, ties going to the earlier year. Returned ascending.
pub fn representative_years_for(group: &[RegimeYears], regime: Regime, per_regime_count: usize) -> RepresentativeYears {
    let mut freq: BTreeMap<i32, usize> = BTreeMap::new();
    for ry in group {
        for &y in ry.get(regime) {
            *freq.entry(y).or_default() += 1;
        }
    }
    let mut common: Vec<i32> = freq.iter().filter(|&(_, &c)| c == group.len()).map(|(&y, _)| y).collect();
    if common.len() >= per_regime_count && !common.is_empty() {
        return RepresentativeYears { years: common, source: YearSource::Intersection };
    }
    let source = if common.is_empty() { YearSource::Frequency } else { YearSource::Padded };
    let mut ranked: Vec<(i32, usize)> = freq.into_iter().filter(|&(y, _)| !common.contains(&y)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let need = per_regime_count - common.len();
    common.extend(ranked.into_iter().take(need).map(|(y, _)| y));
    common.sort_unstable();
    RepresentativeYears { years: common, source }
}

/// [`representative_years_for`] for every regime.
pub fn representative_years(group: &[RegimeYears], per_regime_count: usize) -> BTreeMap<Regime, RepresentativeYears> {
    Regime::BY_SEVERITY.into_iter().map(|r| (r, representative_years_for(group, r, per_regime_count))).collect()
}
