//! CSV and manifest writers.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a value
//! read back parses to the identical double.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::dynamics::TrajectoryRecord;
use crate::error::{Error, Result};
use crate::observables::EnsembleSummary;

pub const ENSEMBLE_HEADER: [&str; 6] = ["t", "mean_z", "stderr_z", "mean_offdiag", "stderr_offdiag", "qv"];
pub const TRAJECTORY_HEADER: [&str; 3] = ["t", "z", "xi"];

pub fn fmt_f64(x: f64) -> String {
    x.to_string()
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Collects the files an experiment writes into one output directory.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|source| Error::Output {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    /// Writes a headered CSV table.
    pub fn write_table<S: AsRef<str>>(&mut self, name: &str, header: &[&str], rows: &[Vec<S>]) -> Result<PathBuf> {
        let path = self.root.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => Error::Output {
                path: path.clone(),
                source,
            },
            other => Error::Config(format!("{other:?}")),
        })?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.iter().map(|c| c.as_ref()))?;
        }
        w.flush()?;
        self.files.push(path.clone());
        Ok(path)
    }

    pub fn write_ensemble(&mut self, name: &str, s: &EnsembleSummary) -> Result<PathBuf> {
        let rows: Vec<Vec<String>> = (0..s.times.len())
            .map(|k| {
                vec![
                    fmt_f64(s.times[k]),
                    fmt_f64(s.mean_z[k]),
                    fmt_opt(s.stderr_z[k]),
                    fmt_f64(s.mean_offdiag[k]),
                    fmt_opt(s.stderr_offdiag[k]),
                    fmt_f64(s.qv[k]),
                ]
            })
            .collect();
        self.write_table(name, &ENSEMBLE_HEADER, &rows)
    }

    pub fn write_trajectory(&mut self, name: &str, times: &[f64], rec: &TrajectoryRecord) -> Result<PathBuf> {
        let rows: Vec<Vec<String>> = times
            .iter()
            .enumerate()
            .map(|(k, t)| {
                vec![
                    fmt_f64(*t),
                    fmt_f64(rec.z[k]),
                    fmt_opt(rec.xi.as_ref().map(|x| x[k])),
                ]
            })
            .collect();
        self.write_table(name, &TRAJECTORY_HEADER, &rows)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Run record written next to the data files once they are complete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub config: ExperimentConfig,
    pub wall_clock_seconds: f64,
    pub results: serde_json::Value,
    pub files: Vec<FileDigest>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn digest(path: &Path) -> Result<FileDigest> {
    let data = fs::read(path)?;
    Ok(FileDigest {
        name: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        bytes: data.len() as u64,
        sha256: hex::encode(Sha256::digest(&data)),
    })
}

impl RunManifest {
    pub fn new(config: &ExperimentConfig, wall_clock_seconds: f64, results: serde_json::Value, files: &[PathBuf]) -> Result<Self> {
        Ok(Self {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            wall_clock_seconds,
            results,
            files: files.iter().map(|p| digest(p)).collect::<Result<_>>()?,
        })
    }

    /// Writes to a temporary file in `dir` and renames it into place.
    pub fn write_atomic(&self, dir: &Path) -> Result<PathBuf> {
        let target = dir.join(MANIFEST_NAME);
        let tmp = dir.join(format!(".{MANIFEST_NAME}.tmp"));
        {
            let mut f = fs::File::create(&tmp).map_err(|source| Error::Output {
                path: tmp.clone(),
                source,
            })?;
            serde_json::to_writer_pretty(&mut f, self)?;
            f.write_all(b"\n")?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &target)?;
        Ok(target)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }
}
