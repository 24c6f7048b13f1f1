//! Run manifests: a JSON record of what a command executed and what it
//! produced, with SHA-256 digests of every emitted file.
//!
//! Re-running the embedded config must reproduce files with identical
//! digests.  The manifest itself carries a wall-clock duration and is the
//! one output that is not byte-stable across runs; the digests are the
//! byte-identity witness for everything else.

use crate::config::RunConfig;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub duration_seconds: f64,
    pub outputs: Vec<OutputDigest>,
    /// Theorem-check verdicts, when the command produced any.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub verdicts: Vec<(String, String)>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    hex
}

pub fn digest_file(path: &Path) -> io::Result<OutputDigest> {
    let bytes = std::fs::read(path)?;
    Ok(OutputDigest {
        file: path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string()),
        sha256: sha256_hex(&bytes),
    })
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        RunManifest {
            artifact: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.clone(),
            duration_seconds: 0.0,
            outputs: Vec::new(),
            verdicts: Vec::new(),
        }
    }

    pub fn record_output(&mut self, path: &Path) -> io::Result<()> {
        self.outputs.push(digest_file(path)?);
        Ok(())
    }

    pub fn record_verdict(&mut self, check: &str, verdict: &str) {
        self.verdicts.push((check.to_string(), verdict.to_string()));
    }

    /// Serialize and write `manifest.json` into the output directory.
    pub fn write(&self, out_dir: &Path) -> io::Result<PathBuf> {
        let path = out_dir.join("manifest.json");
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::create_dir_all(out_dir)?;
        std::fs::write(&path, json)?;
        Ok(path)
    }
}
