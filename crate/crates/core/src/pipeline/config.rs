//! Pipeline configuration, read from a TOML file.
//!
//! ```toml
//! data_dir = "data"          # one <TICKER>.csv per index
//! output_dir = "out"
//!
//! [tickers]
//! developed = ["NYA", "GSPC"]
//! developing = ["BSESN"]
//!
//! [thresholds]
//! a = 1.0
//! b = 6.0
//!
//! [prune]
//! cutoff = 3.372
//! max_depth = 4
//! min_count = 1
//!
//! [emd]
//! s_number = 4
//! max_sifts = 50
//!
//! [hhsa]
//! mask_freq_factor = 1.0
//! mask_amp_factor = 1.6
//! bins = 64
//!
//! [bds]
//! dimensions = [2, 3]
//! eps_factor = 0.5
//!
//! [sensitivity]
//! a = [0.75, 1.0, 1.25]
//! b = [4.5, 6.0, 7.5]
//!
//! [years]
//! per_regime_count = 2
//! min_tree_count = 3
//! [years.overrides.developed]
//! extreme = [2008, 2020]
//! ```
//!
//! Every section is optional except `tickers`. Relative paths resolve against the
//! directory holding the config file. `REGIMEKIT_OUTPUT_DIR`, when set, replaces
//! `output_dir`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::emd::SiftOptions;
use crate::hhsa::HhsaOptions;
use crate::regimes::{Regime, BASELINE, DEFAULT_GRID_A, DEFAULT_GRID_B};
use crate::vlmc::PruneConfig;

pub const OUTPUT_DIR_ENV: &str = "REGIMEKIT_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_data_dir")]
    pub data_dir: PathBuf,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Group name to tickers, in file order within each group.
    pub tickers: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub prune: PruneConfig,
    #[serde(default)]
    pub emd: SiftOptions,
    #[serde(default)]
    pub hhsa: HhsaSettings,
    #[serde(default)]
    pub bds: BdsSettings,
    #[serde(default)]
    pub sensitivity: SensitivityGrid,
    #[serde(default)]
    pub years: YearSettings,
}

fn default_data_dir() -> PathBuf {
    PathBuf::from("data")
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub a: f64,
    pub b: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { a: BASELINE.0, b: BASELINE.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HhsaSettings {
    pub mask_freq_factor: f64,
    pub mask_amp_factor: f64,
    pub max_mask_freq: f64,
    pub bins: usize,
    pub flat_tolerance: f64,
}

impl Default for HhsaSettings {
    fn default() -> Self {
        let o = HhsaOptions::default();
        Self {
            mask_freq_factor: o.mask_freq_factor,
            mask_amp_factor: o.mask_amp_factor,
            max_mask_freq: o.max_mask_freq,
            bins: o.bins,
            flat_tolerance: o.flat_tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BdsSettings {
    pub dimensions: Vec<usize>,
    pub eps_factor: f64,
}

impl Default for BdsSettings {
    fn default() -> Self {
        Self { dimensions: vec![2, 3], eps_factor: 0.5 }
    }
}

/// Cartesian grid of threshold multipliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivityGrid {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Default for SensitivityGrid {
    fn default() -> Self {
        Self { a: DEFAULT_GRID_A.to_vec(), b: DEFAULT_GRID_B.to_vec() }
    }
}

impl SensitivityGrid {
    pub fn cells(&self) -> Vec<(f64, f64)> {
        self.a.iter().flat_map(|&a| self.b.iter().map(move |&b| (a, b))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct YearSettings {
    pub per_regime_count: usize,
    /// Contexts must occur in at least this many trees to be aggregated.
    pub min_tree_count: usize,
    /// Group to regime to explicit years, replacing the derived ones.
    pub overrides: BTreeMap<String, BTreeMap<Regime, Vec<i32>>>,
}

impl Default for YearSettings {
    fn default() -> Self {
        Self { per_regime_count: 2, min_tree_count: 3, overrides: BTreeMap::new() }
    }
}

impl PipelineConfig {
    /// Parses and validates; relative paths are left as written.
    pub fn from_toml_str(s: &str) -> Result<Self, PipelineError> {
        let cfg: Self = toml::from_str(s).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`, resolves relative paths against its directory and applies the
    /// output-directory environment override.
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, String), PipelineError> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.data_dir = base.join(&cfg.data_dir);
        cfg.output_dir = base.join(&cfg.output_dir);
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()) {
            cfg.output_dir = PathBuf::from(dir);
        }
        Ok((cfg, sha256_hex(text.as_bytes())))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let err = |m: String| Err(PipelineError::Config(m));
        if self.tickers.values().all(|v| v.is_empty()) {
            return err("no tickers configured".into());
        }
        let mut seen = BTreeMap::new();
        for (group, list) in &self.tickers {
            for t in list {
                if t.is_empty() || t.contains(['/', '\\']) || t.starts_with('.') {
                    return err(format!("ticker {t:?} is not a valid file stem"));
                }
                if let Some(other) = seen.insert(t.as_str(), group.as_str()) {
                    return err(format!("ticker {t} listed in both {other} and {group}"));
                }
            }
        }
        if !(self.thresholds.a < self.thresholds.b) {
            return err(format!("thresholds need a < b, got ({}, {})", self.thresholds.a, self.thresholds.b));
        }
        if let Some((a, b)) = self.sensitivity.cells().into_iter().find(|(a, b)| !(a < b)) {
            return err(format!("sensitivity cell ({a}, {b}) needs a < b"));
        }
        if self.bds.dimensions.iter().any(|&m| m < 2) || !(self.bds.eps_factor > 0.0) {
            return err("bds needs dimensions >= 2 and eps_factor > 0".into());
        }
        if self.hhsa.bins < 1 {
            return err("hhsa.bins must be positive".into());
        }
        if self.prune.max_depth < 1 || !(self.prune.cutoff >= 0.0) {
            return err("prune needs max_depth >= 1 and cutoff >= 0".into());
        }
        if self.years.per_regime_count < 1 {
            return err("years.per_regime_count must be positive".into());
        }
        if let Some(g) = self.years.overrides.keys().find(|g| !self.tickers.contains_key(*g)) {
            return err(format!("year override for unknown group {g}"));
        }
        Ok(())
    }

    /// Keeps only `names`; groups left empty are dropped.
    pub fn restrict_tickers(&mut self, names: &[String]) -> Result<(), PipelineError> {
        let known: Vec<&String> = self.tickers.values().flatten().collect();
        if let Some(n) = names.iter().find(|n| !known.contains(n)) {
            return Err(PipelineError::Config(format!("ticker {n} is not in the config")));
        }
        for list in self.tickers.values_mut() {
            list.retain(|t| names.contains(t));
        }
        self.tickers.retain(|_, v| !v.is_empty());
        Ok(())
    }

    pub fn hhsa_options(&self) -> HhsaOptions {
        HhsaOptions {
            sift: self.emd,
            mask_freq_factor: self.hhsa.mask_freq_factor,
            mask_amp_factor: self.hhsa.mask_amp_factor,
            max_mask_freq: self.hhsa.max_mask_freq,
            bins: self.hhsa.bins,
            flat_tolerance: self.hhsa.flat_tolerance,
        }
    }

    /// `(group, ticker)` pairs in group then file order.
    pub fn all_tickers(&self) -> Vec<(&str, &str)> {
        self.tickers.iter().flat_map(|(g, list)| list.iter().map(move |t| (g.as_str(), t.as_str()))).collect()
    }

    pub fn price_path(&self, ticker: &str) -> PathBuf {
        self.data_dir.join(format!("{ticker}.csv"))
    }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
