//! CSV/JSON tables and the run manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// A table with a fixed column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_header(name: &str, header: Vec<String>) -> Self {
        Self { name: name.to_string(), header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| crate::Error::Io(std::io::Error::other(e.to_string())))
    }

    /// Array of records; numeric cells become JSON numbers.
    pub fn to_json(&self) -> Result<Vec<u8>> {
        let rows: Vec<serde_json::Map<String, serde_json::Value>> = self
            .rows
            .iter()
            .map(|r| {
                self.header
                    .iter()
                    .zip(r)
                    .map(|(h, v)| {
                        let value = match v.parse::<f64>() {
                            Ok(x) if x.is_finite() => serde_json::Number::from_f64(x).map(serde_json::Value::Number),
                            _ => None,
                        }
                        .unwrap_or_else(|| serde_json::Value::String(v.clone()));
                        (h.clone(), value)
                    })
                    .collect()
            })
            .collect();
        let mut out = serde_json::to_vec_pretty(&rows).map_err(|e| crate::Error::Io(std::io::Error::other(e)))?;
        out.push(b'\n');
        Ok(out)
    }
}

fn csv_err(e: csv::Error) -> crate::Error {
    crate::Error::Io(std::io::Error::other(e.to_string()))
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub kind: String,
    pub seed: u64,
    pub workers: Option<usize>,
    pub config: serde_json::Value,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<OutputEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes every file or none: on a failure the files written so far are removed.
pub(crate) fn write_all(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<Vec<OutputEntry>> {
    let created_dir = !dir.exists();
    std::fs::create_dir_all(dir)?;
    let mut written: Vec<PathBuf> = Vec::new();
    let mut entries = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        if let Err(e) = std::fs::write(&path, bytes) {
            cleanup(dir, &written, created_dir);
            return Err(e.into());
        }
        written.push(path);
        entries.push(OutputEntry { file: name.clone(), sha256: sha256_hex(bytes), bytes: bytes.len() });
    }
    Ok(entries)
}

pub(crate) fn cleanup(dir: &Path, files: &[PathBuf], remove_dir: bool) {
    for f in files {
        let _ = std::fs::remove_file(f);
    }
    if remove_dir {
        let _ = std::fs::remove_dir(dir);
    }
}
