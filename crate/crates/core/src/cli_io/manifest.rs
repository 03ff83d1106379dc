//! Run manifest: what ran, with which seed and inputs, and a checksum of
//! every output file. Written as `manifest.json` in the output directory,
//! once with status `running` before any output and again when finished.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub status: String,
    pub seed: Option<u64>,
    /// SHA-256 over the input documents and the effective settings.
    pub config_hash: String,
    /// Seconds since the Unix epoch.
    pub started_at: u64,
    pub finished_at: Option<u64>,
    pub outputs: Vec<FileEntry>,
    pub error: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Write `contents` to `dir/name` through a temporary file and a rename, so
/// readers never see a partial file.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, dir.join(name))?;
    Ok(())
}

impl RunManifest {
    pub fn start(command: &str, seed: Option<u64>, config_hash: String) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            status: "running".to_string(),
            seed,
            config_hash,
            started_at: now(),
            finished_at: None,
            outputs: Vec::new(),
            error: None,
        }
    }

    pub fn record(&mut self, name: &str, contents: &[u8]) {
        self.outputs.push(FileEntry {
            name: name.to_string(),
            bytes: contents.len() as u64,
            sha256: sha256_hex(contents),
        });
    }

    pub fn finish(&mut self, outcome: std::result::Result<(), &Error>) {
        self.finished_at = Some(now());
        match outcome {
            Ok(()) => self.status = "complete".to_string(),
            Err(e) => {
                self.status = "failed".to_string();
                self.error = Some(format!("{}: {e}", e.code()));
            }
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        text.push('\n');
        write_atomic(dir, MANIFEST_FILE, text.as_bytes())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        serde_json::from_str(&text).map_err(|e| Error::Io(e.to_string()))
    }

    /// The manifest with wall-clock fields cleared, for comparing runs.
    pub fn without_timestamps(&self) -> Self {
        Self {
            started_at: 0,
            finished_at: self.finished_at.map(|_| 0),
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
