//! Run manifests: every output directory records the command line, input
//! hashes, seed, tool version, and timestamp, so results are recomputable
//! from inputs. The timestamp is the only field excluded from byte-level
//! reproducibility comparisons.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use claimcert::error::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    pub timestamp_unix: u64,
    /// sha256 of every input corpus file, keyed by path as given.
    pub corpus_hashes: BTreeMap<String, String>,
    /// sha256 of the effective text of every configuration input.
    pub config_hashes: BTreeMap<String, String>,
    /// Operational notes (e.g. expression semantics of baseline rows).
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn new(seed: u64) -> Self {
        let command = std::env::args().collect::<Vec<_>>().join(" ");
        RunManifest {
            command,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            corpus_hashes: BTreeMap::new(),
            config_hashes: BTreeMap::new(),
            notes: BTreeMap::new(),
        }
    }

    pub fn hash_corpus_file(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        self.corpus_hashes
            .insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn hash_configs(&mut self, sources: &BTreeMap<String, String>) {
        for (name, text) in sources {
            self.config_hashes
                .insert(name.clone(), sha256_hex(text.as_bytes()));
        }
    }

    pub fn note(&mut self, key: &str, value: impl Into<String>) {
        self.notes.insert(key.to_string(), value.into());
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(self).expect("manifest serialization");
        fs::write(&path, json + "\n").map_err(|e| Error::io(path, e))
    }
}
