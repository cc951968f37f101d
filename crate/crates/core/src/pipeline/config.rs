//! The pipeline configuration file (TOML, `schema = 1`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::encoding::EmbeddingConfig;
use crate::neural::{ModelConfig, TrainConfig};
use crate::synthetic::SyntheticConfig;

pub const CONFIG_SCHEMA: u32 = 1;

/// Input and output locations. Relative paths are resolved against the
/// directory of the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// C sources, one directory per program.
    pub source: Option<PathBuf>,
    /// Textual LLVM IR mirroring the source tree.
    pub ir: Option<PathBuf>,
    /// Ground truth: per program a `truth.txt` and/or fix diffs.
    pub truth: Option<PathBuf>,
    /// Library/API names that seed call candidates; the bundled list when
    /// absent.
    pub api_list: Option<PathBuf>,
    pub work: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths { source: None, ir: None, truth: None, api_list: None, work: PathBuf::from("work") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// λ: tokens per model input.
    pub max_tokens: usize,
    /// Fraction of labeled candidates held out from training and used for
    /// detection in the `all` phase; 0 detects on the training data.
    pub holdout: f64,
    /// Label only the first statement generated from each vulnerable line.
    pub label_first_only: bool,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { max_tokens: 900, holdout: 0.2, label_first_only: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectConfig {
    /// ϑ: a line is vulnerable when its score exceeds this.
    pub threshold: f64,
    /// κ for line scores; the model's κ when absent.
    pub kappa: Option<usize>,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig { threshold: 0.5, kappa: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema: u32,
    /// Root of every random stream.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub embedding: EmbeddingConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub detect: DetectConfig,
    /// Alternative model configurations for cross-validated selection
    /// (used when `train.folds ≥ 2`).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub grid: Vec<ModelConfig>,
    /// Generate a labeled corpus instead of reading a project.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticConfig>,
}

impl Default for PipelineConfig {
    /// Full-size settings: 30-dimensional embeddings, 900-token inputs,
    /// 900 hidden units.
    fn default() -> Self {
        PipelineConfig {
            schema: CONFIG_SCHEMA,
            seed: 0,
            paths: Paths::default(),
            data: DataConfig::default(),
            embedding: EmbeddingConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            detect: DetectConfig::default(),
            grid: Vec::new(),
            synthetic: None,
        }
    }
}

impl PipelineConfig {
    /// Settings that train on a laptop CPU in seconds: 16-dimensional
    /// embeddings, 96-token inputs, 32 hidden units.
    pub fn desk() -> Self {
        let mut c = PipelineConfig::default();
        c.data.max_tokens = 96;
        c.embedding.dim = 16;
        c.model = ModelConfig { dropout: 0.2, ..ModelConfig::desk() };
        c.train.learning_rate = 0.01;
        c.train.batch = 8;
        c
    }

    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        let c: PipelineConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        if c.schema != CONFIG_SCHEMA {
            return Err(PipelineError::Config(format!("unsupported schema {} (expected {CONFIG_SCHEMA})", c.schema)));
        }
        c.validate()?;
        Ok(c)
    }

    /// Reads a configuration file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })?;
        let mut c = PipelineConfig::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        c.resolve(base);
        Ok(c)
    }

    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let paths = &mut self.paths;
        for p in [&mut paths.source, &mut paths.ir, &mut paths.truth, &mut paths.api_list].into_iter().flatten() {
            fix(p);
        }
        fix(&mut paths.work);
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn detect_kappa(&self) -> usize {
        self.detect.kappa.unwrap_or(self.model.kappa)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.data.max_tokens == 0 || self.embedding.dim == 0 {
            return bad("max_tokens and embedding dim must be positive".into());
        }
        if !(0.0..1.0).contains(&self.data.holdout) {
            return bad(format!("holdout {} must lie in [0, 1)", self.data.holdout));
        }
        if self.model.kappa == 0 || self.model.kappa > self.data.max_tokens {
            return bad(format!("kappa {} must lie in 1..={}", self.model.kappa, self.data.max_tokens));
        }
        if self.train.batch == 0 || self.train.learning_rate <= 0.0 {
            return bad("train.batch must be ≥ 1 and train.learning_rate positive".into());
        }
        Ok(())
    }
}
