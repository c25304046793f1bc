//! Run manifest: configuration hash, artifact version, timestamps, and a
//! checksum per emitted file, written atomically at the end of a run.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliResult;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub created_unix: u64,
    pub config_sha256: String,
    pub command: String,
    pub outputs: Vec<OutputEntry>,
    /// Module errors surfaced during the run (empty on clean completion).
    pub errors: Vec<String>,
}

pub fn sha256_hex(data: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(data);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

impl RunManifest {
    pub fn new(config_text: &str, command: &str) -> Self {
        Self {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            config_sha256: sha256_hex(config_text.as_bytes()),
            command: command.to_string(),
            outputs: Vec::new(),
            errors: Vec::new(),
        }
    }

    /// Write `data` under the run directory and record its checksum.
    pub fn emit(&mut self, dir: &Path, name: &str, data: &[u8]) -> CliResult<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(name);
        std::fs::write(&path, data)?;
        self.outputs.push(OutputEntry {
            path: name.to_string(),
            sha256: sha256_hex(data),
            bytes: data.len() as u64,
        });
        Ok(path)
    }

    /// Atomic finalization: serialize to a temporary file in the same
    /// directory, then rename over `manifest.json`.
    pub fn finalize(&self, dir: &Path) -> CliResult<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| crate::error::CliError::Run(e.to_string()))?;
        let tmp = dir.join("manifest.json.tmp");
        let path = dir.join("manifest.json");
        std::fs::write(&tmp, json.as_bytes())?;
        std::fs::rename(&tmp, &path)?;
        Ok(path)
    }
}
