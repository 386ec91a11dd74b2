//! Run manifests written beside every output.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize)]
struct Versions {
    wavestack: &'static str,
    wavestack_core: &'static str,
}

#[derive(Serialize)]
pub struct Manifest {
    command: String,
    args: Vec<String>,
    seed: Option<u64>,
    threads: usize,
    versions: Versions,
    inputs: Vec<FileHash>,
    outputs: Vec<FileHash>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    details: serde_json::Value,
    /// Excluded from determinism checks.
    created_at: String,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn hash_all(paths: &[PathBuf]) -> Result<Vec<FileHash>> {
    paths
        .iter()
        .map(|p| {
            Ok(FileHash {
                path: p.display().to_string(),
                sha256: sha256_file(p)?,
            })
        })
        .collect()
}

fn timestamp() -> String {
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .unwrap_or_default();
    chrono::DateTime::from_timestamp(now.as_secs() as i64, now.subsec_nanos())
        .map(|t| t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
        .unwrap_or_default()
}

pub struct RunInfo {
    pub command: String,
    pub args: Vec<String>,
    pub threads: usize,
}

impl RunInfo {
    /// Hashes inputs and outputs and writes the manifest to `dest`.
    pub fn write(
        &self,
        dest: &Path,
        seed: Option<u64>,
        inputs: &[PathBuf],
        outputs: &[PathBuf],
        details: serde_json::Value,
    ) -> Result<()> {
        let manifest = Manifest {
            command: self.command.clone(),
            args: self.args.clone(),
            seed,
            threads: self.threads,
            versions: Versions {
                wavestack: env!("CARGO_PKG_VERSION"),
                wavestack_core: wavestack_core::VERSION,
            },
            inputs: hash_all(inputs)?,
            outputs: hash_all(outputs)?,
            details,
            created_at: timestamp(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(dest, text).with_context(|| format!("writing {}", dest.display()))?;
        Ok(())
    }
}

/// `out.rts` -> `out.rts.manifest.json`.
pub fn beside(file: &Path) -> PathBuf {
    let mut name = file.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    file.with_file_name(name)
}

pub const DIR_MANIFEST: &str = "manifest.json";
