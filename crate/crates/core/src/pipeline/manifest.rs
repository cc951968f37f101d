//! `manifest.json`: which stage produced which artifact, from which inputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{PipelineConfig, PipelineError, Stage};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    /// Directory the stage wrote to, relative to the work directory.
    pub dir: String,
    /// Artifact path (relative to the work directory) → SHA-256.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub millis: u64,
}

fn relative(work: &Path, path: &Path) -> String {
    path.strip_prefix(work).unwrap_or(path).to_string_lossy().replace('\\', "/")
}

impl StageRecord {
    pub fn new(stage: Stage, work: &Path, dir: &Path, inputs: &[PathBuf], outputs: &[(PathBuf, Vec<u8>)], elapsed: Duration) -> Result<Self, PipelineError> {
        let mut ins = BTreeMap::new();
        for p in inputs {
            let bytes = std::fs::read(p).map_err(|source| PipelineError::Io { path: p.clone(), source })?;
            ins.insert(relative(work, p), sha256_hex(&bytes));
        }
        let outs = outputs.iter().map(|(p, b)| (relative(work, p), sha256_hex(b))).collect();
        let dir = relative(work, dir);
        Ok(StageRecord {
            stage: stage.to_string(),
            dir: if dir.is_empty() { ".".into() } else { dir },
            inputs: ins,
            outputs: outs,
            millis: elapsed.as_millis() as u64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    /// SHA-256 of the configuration as serialized TOML.
    pub config_sha256: String,
    pub stages: Vec<StageRecord>,
}

impl RunManifest {
    pub fn new(config: &PipelineConfig) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: config.seed,
            config_sha256: sha256_hex(config.to_toml().as_bytes()),
            stages: Vec::new(),
        }
    }

    /// The existing manifest when it belongs to the same configuration,
    /// otherwise a fresh one.
    pub fn load_or_new(work: &Path, config: &PipelineConfig) -> Self {
        let fresh = RunManifest::new(config);
        std::fs::read_to_string(work.join(MANIFEST_FILE))
            .ok()
            .and_then(|t| serde_json::from_str::<RunManifest>(&t).ok())
            .filter(|m| m.config_sha256 == fresh.config_sha256 && m.version == fresh.version)
            .unwrap_or(fresh)
    }

    /// Adds a record, replacing an earlier run of the same stage into the
    /// same directory.
    pub fn record(&mut self, record: StageRecord) {
        self.stages.retain(|r| !(r.stage == record.stage && r.dir == record.dir));
        self.stages.push(record);
    }

    pub fn save(&self, work: &Path) -> Result<(), PipelineError> {
        let path = work.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        std::fs::write(&path, text).map_err(|source| PipelineError::Io { path, source })
    }
}
