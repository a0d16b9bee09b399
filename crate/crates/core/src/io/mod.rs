//! Configuration, file formats and run directories.
//!
//! A run directory written by [`run_to_dir`] holds
//!
//! ```text
//! effective_config.toml    every parameter, defaults included
//! diag.csv                 one diagnostic row per step
//! snapshots/snap_NNNNNN.ldsnap
//! manifest.toml            file list with SHA-256 digests
//! ```
//!
//! Rerunning from `effective_config.toml` reproduces `diag.csv` and the
//! snapshots byte for byte.

pub mod config;
pub mod csv;
pub mod manifest;
pub mod snapshot;

use std::path::{Path, PathBuf};

pub use config::{parse_config, parse_config_str, OutputFormat, RunConfig};
pub use manifest::Manifest;
pub use snapshot::{read_snapshot, write_snapshot, SnapshotHeader};

use crate::error::{Error, Result};
use crate::experiments::StudyReport;
use crate::solver::{CflAdvisory, RunFailure, RunOutput, Solver, Trajectory};

pub const EFFECTIVE_CONFIG: &str = "effective_config.toml";
pub const DIAG_CSV: &str = "diag.csv";
pub const SNAPSHOT_DIR: &str = "snapshots";

pub fn snapshot_name(index: usize) -> String {
    format!("{SNAPSHOT_DIR}/snap_{index:06}.ldsnap")
}

fn mkdir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn put(dir: &Path, manifest: &mut Manifest, name: &str, bytes: &[u8]) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    manifest.add(name, bytes);
    Ok(())
}

fn write_outputs(config: &RunConfig, dir: &Path, out: &RunOutput, status: &str) -> Result<()> {
    mkdir(dir)?;
    let echo = config.effective_toml();
    let mut manifest = Manifest::new(EFFECTIVE_CONFIG, echo.as_bytes());
    manifest.status = status.into();
    manifest.steps = out.steps as u64;
    put(dir, &mut manifest, EFFECTIVE_CONFIG, echo.as_bytes())?;
    if config.output.wants(OutputFormat::Csv) {
        put(dir, &mut manifest, DIAG_CSV, csv::diag_csv_string(&out.records).as_bytes())?;
    }
    if config.output.wants(OutputFormat::Snapshot) {
        mkdir(&dir.join(SNAPSHOT_DIR))?;
        for (i, f) in out.trajectory.snapshots.iter().enumerate() {
            let header = SnapshotHeader::for_config(f, &config.solver);
            let bytes = snapshot::encode_snapshot(f, &header);
            put(dir, &mut manifest, &snapshot_name(i), &bytes)?;
        }
    }
    manifest.write(dir)
}

/// Runs `config` and writes its run directory to `dir`, or to
/// `config.output.dir` when `dir` is `None`. A run that blows up still
/// writes everything computed before the failure, with
/// `status = "blow_up"` in the manifest.
pub fn run_to_dir(config: &RunConfig, dir: Option<&Path>) -> std::result::Result<RunOutput, RunFailure> {
    let dir: PathBuf = dir.map(Path::to_path_buf).unwrap_or_else(|| config.output.dir.clone());
    let solver = Solver::new(config.solver.clone()).map_err(|error| RunFailure {
        error,
        partial: Box::new(RunOutput::empty(CflAdvisory::unknown(config.solver.dt))),
    })?;
    match solver.run() {
        Ok(out) => match write_outputs(config, &dir, &out, "complete") {
            Ok(()) => Ok(out),
            Err(error) => Err(RunFailure {
                error,
                partial: Box::new(out),
            }),
        },
        Err(failure) => {
            if let Err(error) = write_outputs(config, &dir, &failure.partial, "blow_up") {
                return Err(RunFailure {
                    error,
                    partial: failure.partial,
                });
            }
            Err(failure)
        }
    }
}

pub const STUDY_PARAMS: &str = "study.toml";
pub const STUDY_CSV: &str = "study.csv";
pub const SUMMARY_TXT: &str = "summary.txt";

/// Writes a study directory: the parameters that produced it, the table,
/// the plain-text summary and a manifest.
pub fn write_study_dir(dir: &Path, report: &StudyReport, params: &toml::Table) -> Result<()> {
    mkdir(dir)?;
    let echo = toml::to_string(params).map_err(|e| Error::Format(e.to_string()))?;
    let mut manifest = Manifest::new(STUDY_PARAMS, echo.as_bytes());
    manifest.status = if report.pass() { "complete" } else { "checks_failed" }.into();
    put(dir, &mut manifest, STUDY_PARAMS, echo.as_bytes())?;
    put(dir, &mut manifest, STUDY_CSV, csv::study_csv_string(report).as_bytes())?;
    put(dir, &mut manifest, SUMMARY_TXT, report.summary().as_bytes())?;
    manifest.write(dir)
}

/// A run directory read back from disk.
#[derive(Debug, Clone)]
pub struct RunDir {
    pub manifest: Manifest,
    pub config: RunConfig,
    pub trajectory: Trajectory,
    pub headers: Vec<SnapshotHeader>,
}

/// Loads the configuration echo and every snapshot listed in the manifest.
pub fn load_run_dir(dir: &Path) -> Result<RunDir> {
    let manifest = Manifest::read(dir)?;
    let config = parse_config(&dir.join(&manifest.config), &[])?;
    let mut trajectory = Trajectory::default();
    let mut headers = Vec::new();
    for p in manifest.snapshot_paths() {
        let (f, h) = snapshot::read_snapshot_for(&dir.join(p), config.solver.grid)?;
        trajectory.push(f);
        headers.push(h);
    }
    Ok(RunDir {
        manifest,
        config,
        trajectory,
        headers,
    })
}
