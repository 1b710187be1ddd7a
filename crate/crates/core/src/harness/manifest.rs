//! Run manifest: what was run, with which configuration, and what it wrote.

use crate::error::Result;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};
use toml::{Table, Value};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// SHA-256 of the canonical serialization; tables are key-sorted, so the
/// hash does not depend on the order keys appear in the source file.
pub fn config_hash(t: &Table) -> String {
    let text = toml::to_string(t).expect("tables always serialize");
    let digest = Sha256::digest(text.as_bytes());
    let mut s = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(s, "{b:02x}");
    }
    s
}

pub fn unix_seconds() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub name: String,
    pub point: String,
    pub solver: String,
    pub config_hash: String,
    pub status: RunStatus,
    pub files: Vec<PathBuf>,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config_hash: String,
    pub code_version: String,
    pub started: f64,
    pub finished: f64,
    pub workers: usize,
    pub runs: Vec<RunRecord>,
}

impl RunManifest {
    pub fn n_failed(&self) -> usize {
        self.runs.iter().filter(|r| r.status != RunStatus::Ok).count()
    }

    pub fn files(&self) -> impl Iterator<Item = &PathBuf> {
        self.runs.iter().flat_map(|r| r.files.iter())
    }

    pub fn to_table(&self, root: &Path) -> Table {
        let mut t = Table::new();
        t.insert("config_hash".into(), Value::String(self.config_hash.clone()));
        t.insert("code_version".into(), Value::String(self.code_version.clone()));
        t.insert("started_unix".into(), Value::Float(self.started));
        t.insert("finished_unix".into(), Value::Float(self.finished));
        t.insert("workers".into(), Value::Integer(self.workers as i64));
        let runs = self
            .runs
            .iter()
            .map(|r| {
                let mut e = Table::new();
                e.insert("name".into(), Value::String(r.name.clone()));
                e.insert("point".into(), Value::String(r.point.clone()));
                e.insert("solver".into(), Value::String(r.solver.clone()));
                e.insert("config_hash".into(), Value::String(r.config_hash.clone()));
                let (status, err) = match &r.status {
                    RunStatus::Ok => ("ok", None),
                    RunStatus::Failed(m) => ("failed", Some(m.clone())),
                };
                e.insert("status".into(), Value::String(status.into()));
                if let Some(m) = err {
                    e.insert("error".into(), Value::String(m));
                }
                e.insert("elapsed_s".into(), Value::Float(r.elapsed_s));
                let files = r
                    .files
                    .iter()
                    .map(|f| Value::String(f.strip_prefix(root).unwrap_or(f).display().to_string()))
                    .collect();
                e.insert("files".into(), Value::Array(files));
                Value::Table(e)
            })
            .collect();
        t.insert("run".into(), Value::Array(runs));
        t
    }

    pub fn write(&self, root: &Path) -> Result<PathBuf> {
        let path = root.join("manifest.toml");
        let text = toml::to_string(&self.to_table(root)).expect("tables always serialize");
        std::fs::write(&path, text)?;
        Ok(path)
    }
}
