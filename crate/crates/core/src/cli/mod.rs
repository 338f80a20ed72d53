//! Batch orchestration behind the `voxelval` binary.
//!
//! Every subcommand is a `run_*` function taking a [`PipelineConfig`] and
//! explicit inputs, so the whole pipeline is scriptable and testable
//! without spawning processes. Cohort runs treat each subdirectory of a
//! cohort root as one case (see [`layout`]); failing cases are logged and
//! skipped, and reported through [`RunOutcome::exit_code`].

mod commands;
mod config;
mod io;
mod report;

pub use commands::*;
pub use config::*;
pub use io::{read_csv_table, sha256_file, CsvTable, FileHash, Provenance};
pub use report::*;

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

/// File names inside a case directory.
pub mod layout {
    /// Prefix of model probability maps consumed by `fuse`.
    pub const PROB_PREFIX: &str = "prob_";
    /// Segmentation A: metrics input and source of ET for rims.
    pub const SEG_A: &str = "seg_a";
    /// Segmentation B, compared against A.
    pub const SEG_B: &str = "seg_b";
    pub const SCALAR: &str = "rcbv";
    pub const ETRL: &str = "etrl";
    /// Optional brain mask; rims are clipped to it when present.
    pub const BRAIN: &str = "brain";
    /// Written by `fuse`; used as NEH by `rim` and as pNEH by `spatial`.
    pub const NEH: &str = "neh";
    pub const NEH_CONFIDENCE: &str = "neh_confidence";
}

/// A case directory's `<stem>.nii.gz` or `<stem>.nii`, if present.
pub fn find_volume(dir: &Path, stem: &str) -> Option<PathBuf> {
    ["nii.gz", "nii"]
        .iter()
        .map(|ext| dir.join(format!("{stem}.{ext}")))
        .find(|p| p.is_file())
}

pub(crate) fn require_volume(dir: &Path, stem: &str) -> Result<PathBuf> {
    find_volume(dir, stem).ok_or_else(|| {
        Error::InvalidArgument(format!("{}: missing {stem}.nii.gz", dir.display()))
    })
}

/// Case subdirectories of a cohort root, sorted by name.
pub fn list_cases(root: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut cases = Vec::new();
    for entry in std::fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if entry.path().is_dir() && !name.starts_with('.') {
            cases.push((name, entry.path()));
        }
    }
    cases.sort();
    if cases.is_empty() {
        return Err(Error::InvalidArgument(format!("{}: no case directories", root.display())));
    }
    Ok(cases)
}

/// A case that could not be processed.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CaseFailure {
    pub case_id: String,
    pub error: String,
}

/// What a subcommand did.
#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub processed: Vec<String>,
    pub failures: Vec<CaseFailure>,
    pub outputs: Vec<PathBuf>,
    /// Hash of the provenance document, when one was written.
    pub provenance_hash: Option<String>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            EXIT_OK
        } else {
            EXIT_PARTIAL
        }
    }
}
