//! Run manifests: every invocation appends one record with digests of the
//! files it read and wrote, so multi-invocation curriculum runs can be
//! audited for stage/state mismatches.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Resolved argument and config values.
    pub args: BTreeMap<String, String>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub engine_version: String,
    pub exit_code: i32,
    pub duration_ms: u128,
    pub unix_timestamp: u64,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            args: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            engine_version: env!("CARGO_PKG_VERSION").to_string(),
            exit_code: 0,
            duration_ms: 0,
            unix_timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn arg(&mut self, key: &str, value: impl ToString) {
        self.args.insert(key.to_string(), value.to_string());
    }

    pub fn record_input(&mut self, path: &Path) {
        self.inputs.push(digest_of(path));
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(digest_of(path));
    }

    /// Appends this manifest as one JSON line; best-effort by design so a
    /// failing run still reports its own error first.
    pub fn append_to(&self, out_dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(out_dir)?;
        let path: PathBuf = out_dir.join("run_manifests.jsonl");
        let mut file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        let line = serde_json::to_string(self).expect("manifest serializes");
        writeln!(file, "{line}")
    }
}

fn digest_of(path: &Path) -> FileDigest {
    let sha256 = match std::fs::read(path) {
        Ok(bytes) => {
            let mut hasher = Sha256::new();
            hasher.update(&bytes);
            hex::encode(hasher.finalize())
        }
        Err(_) => "unreadable".to_string(),
    };
    FileDigest { path: path.display().to_string(), sha256 }
}
