//! Reproducibility record written next to every run's outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::output::{write_bytes, OutputError};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// SHA-256 of the config text as read; absent when run without a config.
    pub config_digest: Option<String>,
    pub master_seed: u64,
    /// RFC 3339, UTC.
    pub started: String,
    pub finished: String,
    /// Sorted by path.
    pub outputs: Vec<OutputEntry>,
}

/// Collects output files while a subcommand runs, then seals them into a
/// manifest.
#[derive(Debug)]
pub struct RunRecorder {
    out_dir: PathBuf,
    subcommand: String,
    config_digest: Option<String>,
    master_seed: u64,
    started: String,
    outputs: Vec<OutputEntry>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunRecorder {
    pub fn start(
        out_dir: &Path,
        subcommand: &str,
        config_text: Option<&str>,
        master_seed: u64,
    ) -> Self {
        RunRecorder {
            out_dir: out_dir.to_path_buf(),
            subcommand: subcommand.into(),
            config_digest: config_text.map(|t| sha256_hex(t.as_bytes())),
            master_seed,
            started: now(),
            outputs: Vec::new(),
        }
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.out_dir.join(rel)
    }

    /// Writes `bytes` to `rel` under the output directory and records it.
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), OutputError> {
        let path = self.path(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| OutputError::io(parent, e))?;
        }
        write_bytes(&path, bytes)?;
        self.record(rel, bytes);
        Ok(())
    }

    /// Records a file already written to `rel`.
    pub fn record(&mut self, rel: &str, bytes: &[u8]) {
        self.outputs.retain(|o| o.path != rel);
        self.outputs.push(OutputEntry {
            path: rel.into(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
    }

    pub fn finish(mut self) -> Result<RunManifest, OutputError> {
        self.outputs.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = RunManifest {
            tool: "humtrack".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: self.subcommand,
            config_digest: self.config_digest,
            master_seed: self.master_seed,
            started: self.started,
            finished: now(),
            outputs: self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        write_bytes(&self.out_dir.join(MANIFEST_FILE), text.as_bytes())?;
        Ok(manifest)
    }
}
