use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Checksums of everything one stage emitted.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Output path relative to the run directory mapped to its SHA-256.
    /// Image trees are recorded as one digest per technique directory.
    pub files: BTreeMap<String, String>,
    /// Seconds since the Unix epoch when the stage finished.
    pub finished_at: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLedger {
    pub config: serde_json::Value,
    pub stages: BTreeMap<String, StageRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Digest over `(name, digest)` pairs in sorted order.
pub fn tree_digest<'a>(entries: impl IntoIterator<Item = (&'a str, &'a str)>) -> String {
    let mut pairs: Vec<_> = entries.into_iter().collect();
    pairs.sort_unstable();
    let mut h = Sha256::new();
    for (name, digest) in pairs {
        h.update(name.as_bytes());
        h.update([0]);
        h.update(digest.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

impl RunLedger {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Ok(RunLedger::default());
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("ledger serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// Merge `files` into the stage record and stamp it.
    pub fn record(
        &mut self,
        config: serde_json::Value,
        stage: &str,
        files: BTreeMap<String, String>,
    ) {
        self.config = config;
        let entry = self.stages.entry(stage.to_string()).or_default();
        entry.files.extend(files);
        entry.finished_at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
    }
}
