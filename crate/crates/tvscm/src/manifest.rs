//! Run manifests: enough to repeat a command exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tvscm_core::data::Dataset;

use crate::{io, Error, Result};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// Sample count plus a hash over the canonical byte encoding of a dataset
/// (features as little-endian `f64`, then labels as little-endian `u64`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub name: String,
    pub samples: usize,
    pub bytes: u64,
    pub sha256: String,
}

impl DatasetFingerprint {
    pub fn of(dataset: &Dataset) -> Self {
        let mut hasher = Sha256::new();
        let mut bytes = 0u64;
        for v in dataset.features().as_slice() {
            hasher.update(v.to_le_bytes());
            bytes += 8;
        }
        for &l in dataset.labels() {
            hasher.update((l as u64).to_le_bytes());
            bytes += 8;
        }
        let digest = hasher.finalize();
        DatasetFingerprint {
            name: dataset.name.clone(),
            samples: dataset.len(),
            bytes,
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    /// Arguments with every default spelled out; `tvscm <args…>` repeats the run.
    pub args: Vec<String>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub datasets: Vec<DatasetFingerprint>,
    pub artifacts: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>, config: serde_json::Value) -> Self {
        RunManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            args,
            config,
            seed: None,
            datasets: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = io::read(path)?;
        serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        io::write(&dir.join(MANIFEST_FILE), self.to_json().as_bytes())
    }
}
