//! Config-driven batch runs over groups of indices.
//!
//! Each stage writes under `<output_dir>/<stage>/` and records its files, with SHA-256
//! checksums, in `<output_dir>/manifest.json`. Stages read raw prices or the files of
//! earlier stages, never in-memory state, so any stage can be rerun alone.
//!
//! | stage         | reads                                   | writes |
//! |---------------|-----------------------------------------|--------|
//! | `ingest`      | prices                                  | `<T>.returns.csv`, `<T>.states.csv`, `<T>.cutoffs.json` |
//! | `bds`         | prices                                  | `bds.csv` |
//! | `regimes`     | prices                                  | `<T>.imfs.csv` + `.json`, `<T>.labels.csv`, `regime_years.json`, `representative_years.json` |
//! | `sensitivity` | `regimes/<T>.labels.csv`                | `<T>.json` |
//! | `hhsa`        | `regimes/` decompositions, years        | `<T>_<year>.spectrum.csv` + `.json`, `windows.csv`, `profiles.csv` |
//! | `vlmc`        | prices, `regimes/representative_years.json` | `<T>_<year>.tree.json`, `index.json` |
//! | `metrics`     | `vlmc/`                                 | `<group>_<regime>.json`, `<group>_<regime>.contexts.csv` |
//!
//! Tickers are processed in parallel within a stage and written in config order, so
//! identical config and data give identical bytes.

mod config;
mod manifest;
mod report;
mod stages;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{
    BdsSettings, HhsaSettings, PipelineConfig, SensitivityGrid, Thresholds, YearSettings, OUTPUT_DIR_ENV,
};
pub use manifest::{write_atomic, FileRecord, RunManifest, StageRecord, Warning, MANIFEST_FILE};
pub use report::{build_report, export_reports, Cell, Report, ReportFormat, Table};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("missing input for ticker {0}")]
    MissingInput(String),
    #[error("data error{}: {cause}", .ticker.as_ref().map(|t| format!(" ({t})")).unwrap_or_default())]
    Data { ticker: Option<String>, cause: String },
    #[error("stage {stage} failed{}: {cause}", .ticker.as_ref().map(|t| format!(" on {t}")).unwrap_or_default())]
    StageFailure { stage: Stage, ticker: Option<String>, cause: String },
    #[error("missing stage output: {0}")]
    MissingStageOutput(String),
    #[error("io: {0}")]
    Io(String),
}

impl PipelineError {
    /// Process exit code: 2 config, 3 data, 4 stage failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::MissingInput(_) | PipelineError::Data { .. } => 3,
            PipelineError::StageFailure { .. } | PipelineError::MissingStageOutput(_) | PipelineError::Io(_) => 4,
        }
    }
}

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Bds,
    Regimes,
    Sensitivity,
    Hhsa,
    Vlmc,
    Metrics,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Ingest,
        Stage::Bds,
        Stage::Regimes,
        Stage::Sensitivity,
        Stage::Hhsa,
        Stage::Vlmc,
        Stage::Metrics,
        Stage::Report,
    ];

    /// Stages that compute from data, everything but `report`.
    pub const ANALYSIS: [Stage; 7] =
        [Stage::Ingest, Stage::Bds, Stage::Regimes, Stage::Sensitivity, Stage::Hhsa, Stage::Vlmc, Stage::Metrics];

    pub fn dir(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Bds => "bds",
            Stage::Regimes => "regimes",
            Stage::Sensitivity => "sensitivity",
            Stage::Hhsa => "hhsa",
            Stage::Vlmc => "vlmc",
            Stage::Metrics => "metrics",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dir())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.dir() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

/// Runs `stages` (in execution order, duplicates ignored) and returns the updated manifest.
///
/// `config_sha256` identifies the configuration; a manifest left by a different config is
/// discarded. The `report` stage exports both JSON and CSV.
pub fn run_pipeline(cfg: &PipelineConfig, config_sha256: &str, stages: &[Stage]) -> Result<RunManifest, PipelineError> {
    cfg.validate()?;
    let root = cfg.output_dir.as_path();
    let mut manifest = RunManifest::load_or_new(root, config_sha256)?;
    let mut order = stages.to_vec();
    order.sort();
    order.dedup();
    for stage in order {
        let started = Instant::now();
        let (outputs, warnings) = match stage {
            Stage::Ingest => stages::ingest(cfg)?,
            Stage::Bds => stages::bds(cfg)?,
            Stage::Regimes => stages::regimes(cfg)?,
            Stage::Sensitivity => stages::sensitivity(cfg, root)?,
            Stage::Hhsa => stages::hhsa(cfg, root)?,
            Stage::Vlmc => stages::vlmc(cfg, root)?,
            Stage::Metrics => stages::metrics(cfg, root)?,
            Stage::Report => {
                let mut files = export_reports(root, &manifest, ReportFormat::Json)?;
                files.extend(export_reports(root, &manifest, ReportFormat::Csv)?);
                manifest.replace_stage(stage, started.elapsed().as_secs_f64(), files, Vec::new());
                manifest.write(root)?;
                continue;
            }
        };
        let files = outputs.write(root)?;
        manifest.replace_stage(stage, started.elapsed().as_secs_f64(), files, warnings);
        manifest.write(root)?;
    }
    manifest.write(root)?;
    Ok(manifest)
}
