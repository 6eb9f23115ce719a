//! Command-line orchestration: configuration, seeded replica fan-out and
//! persisted, checksummed outputs.

pub mod config;
pub mod describe;
pub mod manifest;
pub mod pipelines;

pub use config::{ExperimentConfig, Model, ModelKind, Pipeline};
pub use describe::describe;
pub use manifest::{verify_manifest, RunManifest};

use std::path::Path;
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error(transparent)]
    Model(#[from] stripsde_core::Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) | Self::Model(_) => 2,
            Self::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    ExperimentConfig::from_toml(&text)
}

/// Validates, runs the pipeline and writes outputs plus `manifest.json` into
/// `output_dir`. Nothing is written when validation fails.
pub fn run(cfg: &ExperimentConfig) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    let model = cfg.validate()?;
    let out = pipelines::execute(cfg, &model)?;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir)?;
    let mut files = out.files;
    files.push(("summary.txt".into(), out.summary));
    let mut checksums = vec![];
    for (name, body) in &files {
        std::fs::write(dir.join(name), body)?;
        checksums.push((name.clone(), manifest::sha256_hex(body.as_bytes())));
    }
    let m = RunManifest::new(cfg, start.elapsed().as_secs_f64(), &out.replicas, checksums);
    m.write(dir)?;
    Ok(m)
}
