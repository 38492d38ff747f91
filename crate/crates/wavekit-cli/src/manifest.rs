//! Run manifests: every invocation writes `manifest.json` into the output
//! directory, echoing the fully resolved configuration, the seed, content
//! hashes of inputs and artifacts, and the outcome — also on failure.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub workers: Option<usize>,
    /// Fully resolved configuration, defaults included.
    pub config: Value,
    /// sha256 of the raw config file, when one was given.
    pub config_hash: Option<String>,
    /// artifact file name → sha256 of its bytes.
    pub artifacts: BTreeMap<String, String>,
    /// free-form per-command summary numbers (counts, locations, …)
    pub summary: BTreeMap<String, Value>,
    pub status: String,
    pub error: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}

impl Manifest {
    pub fn new(command: &str, seed: u64, workers: Option<usize>, config: Value) -> Self {
        Manifest {
            command: command.to_string(),
            seed,
            workers,
            config,
            config_hash: None,
            artifacts: BTreeMap::new(),
            summary: BTreeMap::new(),
            status: "running".into(),
            error: None,
        }
    }

    pub fn record_artifact(&mut self, path: &Path, bytes: &[u8]) {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        self.artifacts.insert(name, sha256_hex(bytes));
    }

    pub fn note<V: Serialize>(&mut self, key: &str, value: V) {
        self.summary.insert(
            key.to_string(),
            serde_json::to_value(value).expect("summary value serializes"),
        );
    }

    pub fn write(&self, out_dir: &Path) -> std::io::Result<PathBuf> {
        let path = out_dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

/// Write an artifact and record its hash.
pub fn write_artifact(
    manifest: &mut Manifest,
    out_dir: &Path,
    name: &str,
    bytes: &[u8],
) -> std::io::Result<PathBuf> {
    let path = out_dir.join(name);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&path, bytes)?;
    manifest.record_artifact(&path, bytes);
    Ok(path)
}
