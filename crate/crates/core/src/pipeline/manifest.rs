//! Run manifest and atomic file output.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::sha256_hex;
use super::{PipelineError, Stage};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FileRecord {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Warning {
    pub stage: Stage,
    pub ticker: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    /// Stages run, in execution order, across every run sharing this config.
    pub stages: Vec<StageRecord>,
    pub warnings: Vec<Warning>,
    /// Every file currently produced under the output directory, sorted by path.
    pub files: Vec<FileRecord>,
}

impl RunManifest {
    pub fn new(config_sha256: &str) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_sha256: config_sha256.into(),
            stages: Vec::new(),
            warnings: Vec::new(),
            files: Vec::new(),
        }
    }

    /// The manifest in `dir` if it was written for the same config, else a fresh one.
    pub fn load_or_new(dir: &Path, config_sha256: &str) -> Result<Self, PipelineError> {
        match Self::load(dir) {
            Ok(m) if m.config_sha256 == config_sha256 => Ok(m),
            Ok(_) | Err(PipelineError::MissingStageOutput(_)) => Ok(Self::new(config_sha256)),
            Err(e) => Err(e),
        }
    }

    pub fn load(dir: &Path) -> Result<Self, PipelineError> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path)
            .map_err(|_| PipelineError::MissingStageOutput(path.display().to_string()))?;
        serde_json::from_str(&text)
            .map_err(|e| PipelineError::Data { ticker: None, cause: format!("{}: {e}", path.display()) })
    }

    /// Replaces everything previously recorded for `stage`.
    pub(crate) fn replace_stage(&mut self, stage: Stage, seconds: f64, files: Vec<FileRecord>, warnings: Vec<Warning>) {
        let prefix = format!("{}/", stage.dir());
        self.files.retain(|f| !f.path.starts_with(&prefix));
        self.files.extend(files);
        self.files.sort();
        self.warnings.retain(|w| w.stage != stage);
        self.warnings.extend(warnings);
        self.warnings.sort();
        self.stages.retain(|s| s.stage != stage);
        self.stages.push(StageRecord { stage, seconds });
        self.stages.sort_by_key(|s| s.stage);
    }

    /// Adds or replaces records by path, leaving the rest untouched.
    pub fn merge_files(&mut self, files: Vec<FileRecord>) {
        self.files.retain(|f| !files.iter().any(|n| n.path == f.path));
        self.files.extend(files);
        self.files.sort();
    }

    pub fn files_under(&self, stage: Stage) -> impl Iterator<Item = &FileRecord> {
        let prefix = format!("{}/", stage.dir());
        self.files.iter().filter(move |f| f.path.starts_with(&prefix))
    }

    pub fn write(&self, dir: &Path) -> Result<(), PipelineError> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        write_atomic(&dir.join(MANIFEST_FILE), text.as_bytes())
    }

    /// Checks that every listed file exists with its recorded checksum.
    pub fn verify(&self, dir: &Path) -> Result<(), PipelineError> {
        for f in &self.files {
            let bytes =
                std::fs::read(dir.join(&f.path)).map_err(|_| PipelineError::MissingStageOutput(f.path.clone()))?;
            if sha256_hex(&bytes) != f.sha256 {
                return Err(PipelineError::MissingStageOutput(format!("{} (checksum mismatch)", f.path)));
            }
        }
        Ok(())
    }
}

/// Writes through a sibling temporary file and a rename, creating parent directories.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let io = |e: std::io::Error| PipelineError::Io(format!("{}: {e}", path.display()));
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Output file contents collected before anything is written.
#[derive(Debug, Default)]
pub(crate) struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, rel: String, bytes: Vec<u8>) {
        self.files.push((rel, bytes));
    }

    pub fn extend(&mut self, other: Outputs) {
        self.files.extend(other.files);
    }

    pub fn write(self, root: &Path) -> Result<Vec<FileRecord>, PipelineError> {
        let mut records = Vec::with_capacity(self.files.len());
        for (rel, bytes) in self.files {
            write_atomic(&root.join(&rel), &bytes)?;
            records.push(FileRecord { sha256: sha256_hex(&bytes), bytes: bytes.len() as u64, path: rel });
        }
        records.sort();
        Ok(records)
    }
}
