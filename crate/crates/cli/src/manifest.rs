use crate::config::ExperimentConfig;
use crate::CliError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaRecord {
    pub index: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub pipeline: String,
    pub config: String,
    pub wall_clock_seconds: f64,
    pub replicas: Vec<ReplicaRecord>,
    pub failed_replicas: Vec<usize>,
    /// (file name, sha256 hex) in write order
    pub outputs: Vec<(String, String)>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn new(cfg: &ExperimentConfig, seconds: f64, replicas: &[(usize, u64, Option<String>)], outputs: Vec<(String, String)>) -> Self {
        let records: Vec<ReplicaRecord> = replicas.iter().map(|(i, s, e)| ReplicaRecord { index: *i, seed: *s, error: e.clone() }).collect();
        Self {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            pipeline: cfg.pipeline.name().to_string(),
            config: cfg.to_toml(),
            wall_clock_seconds: seconds,
            failed_replicas: records.iter().filter(|r| r.error.is_some()).map(|r| r.index).collect(),
            replicas: records,
            outputs,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.failed_replicas.is_empty() {
            0
        } else {
            3
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Io(e.to_string()))?;
        std::fs::write(dir.join(MANIFEST), text + "\n")?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(dir.join(MANIFEST))?;
        serde_json::from_str(&text).map_err(|e| CliError::Io(e.to_string()))
    }
}

/// Names of output files whose checksum no longer matches the manifest.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>, CliError> {
    let m = RunManifest::read(dir)?;
    let mut bad = vec![];
    for (name, sum) in &m.outputs {
        match std::fs::read(dir.join(name)) {
            Ok(bytes) if &sha256_hex(&bytes) == sum => {}
            _ => bad.push(name.clone()),
        }
    }
    Ok(bad)
}
