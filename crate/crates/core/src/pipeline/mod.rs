//! The end-to-end pipeline behind one configuration file.
//!
//! Learning phase: extract → ingest-ir → slice → label → encode → train.
//! Test phase: extract → ingest-ir → slice → encode → detect (→ eval when
//! ground truth is configured), reusing the learned embedding and model.
//! Phase `all` learns, then detects on the held-out candidates and
//! evaluates. Each stage reads its inputs from the work directory, writes
//! its outputs there, and records their SHA-256 hashes in
//! `manifest.json`; test-phase artifacts live in `work/test/`.
//!
//! ```
//! use irloc::pipeline::{PipelineConfig, Stage};
//!
//! let config = PipelineConfig::parse("schema = 1\nseed = 7\n[synthetic]\nsamples = 10\n").unwrap();
//! assert_eq!(config.seed, 7);
//! assert!(PipelineConfig::parse("schema = 2\n[synthetic]\n").is_err());
//! assert_eq!("ingest-ir".parse::<Stage>().unwrap(), Stage::IngestIr);
//! ```

mod config;
mod explain;
mod manifest;
pub mod ops;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

pub use config::{DataConfig, DetectConfig, Paths, PipelineConfig, CONFIG_SCHEMA};
pub use explain::Explanation;
pub use manifest::{sha256_hex, RunManifest, StageRecord, MANIFEST_FILE};

use crate::corpus::{load_truth, read_corpus, write_corpus, LineMapping};
use crate::encoding::EmbeddingTable;
use crate::frontend::ApiList;
use crate::neural::{read_report, Model};
use crate::seed::SeedTree;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{}: missing; run the `{stage}` stage first", path.display())]
    MissingArtifact { path: PathBuf, stage: Stage },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("no candidate `{id}`; nearest ids: {}", nearest.join(", "))]
    UnknownId { id: String, nearest: Vec<String> },
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Frontend(#[from] crate::frontend::FrontendError),
    #[error(transparent)]
    Ir(#[from] crate::ir::IrError),
    #[error(transparent)]
    Dependence(#[from] crate::dependence::DependenceError),
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Encoding(#[from] crate::encoding::EncodingError),
    #[error(transparent)]
    Neural(#[from] crate::neural::NeuralError),
    #[error(transparent)]
    Eval(#[from] crate::evaluation::EvalError),
}

impl PipelineError {
    /// Process exit code: 1 for configuration (usage) problems, 2 for
    /// problems with the data.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Synthesize,
    Extract,
    IngestIr,
    Slice,
    Label,
    Encode,
    Train,
    Detect,
    Eval,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Synthesize => "synthesize",
            Stage::Extract => "extract",
            Stage::IngestIr => "ingest-ir",
            Stage::Slice => "slice",
            Stage::Label => "label",
            Stage::Encode => "encode",
            Stage::Train => "train",
            Stage::Detect => "detect",
            Stage::Eval => "eval",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [
            Stage::Synthesize,
            Stage::Extract,
            Stage::IngestIr,
            Stage::Slice,
            Stage::Label,
            Stage::Encode,
            Stage::Train,
            Stage::Detect,
            Stage::Eval,
        ]
        .into_iter()
        .find(|st| st.as_str() == s)
        .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Learn,
    Test,
    All,
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "learn" => Ok(Phase::Learn),
            "test" => Ok(Phase::Test),
            "all" => Ok(Phase::All),
            _ => Err(format!("unknown phase `{s}` (learn, test or all)")),
        }
    }
}

/// Artifact file names inside the work directory.
pub mod files {
    pub const CANDIDATES: &str = "candidates.txt";
    pub const IR_INDEX: &str = "ir-index.txt";
    pub const SLICES: &str = "slices.txt";
    pub const CORPUS: &str = "corpus.txt";
    pub const EMBEDDING: &str = "embedding.tsv";
    pub const TRAIN: &str = "train.bin";
    pub const HOLDOUT: &str = "holdout.bin";
    pub const TEST: &str = "test.bin";
    pub const MODEL: &str = "model.bin";
    pub const REPORT: &str = "report.tsv";
    pub const SUMMARY: &str = "summary.tsv";
    /// Subdirectory for test-phase artifacts.
    pub const TEST_DIR: &str = "test";
}

pub struct Pipeline {
    pub config: PipelineConfig,
    work: PathBuf,
    seeds: SeedTree,
    api: ApiList,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        let api = match &config.paths.api_list {
            Some(p) => ApiList::load(p)?,
            None => ApiList::default(),
        };
        let work = config.paths.work.clone();
        std::fs::create_dir_all(work.join(files::TEST_DIR)).map_err(io_err(&work))?;
        log::info!("root seed {}", config.seed);
        Ok(Pipeline { seeds: SeedTree::new(config.seed), config, work, api })
    }

    pub fn work_dir(&self) -> &Path {
        &self.work
    }

    pub fn api(&self) -> &ApiList {
        &self.api
    }

    /// Stages a phase runs, in order.
    pub fn stages(&self, phase: Phase) -> Vec<Stage> {
        let synthetic = self.config.synthetic.is_some();
        let mut learn = if synthetic {
            vec![Stage::Synthesize]
        } else {
            vec![Stage::Extract, Stage::IngestIr, Stage::Slice, Stage::Label]
        };
        learn.extend([Stage::Encode, Stage::Train]);
        match phase {
            Phase::Learn => learn,
            Phase::All => {
                learn.extend([Stage::Detect, Stage::Eval]);
                learn
            }
            Phase::Test => {
                let mut s = vec![Stage::Extract, Stage::IngestIr, Stage::Slice, Stage::Encode, Stage::Detect];
                if self.config.paths.truth.is_some() {
                    s.push(Stage::Eval);
                }
                s
            }
        }
    }

    pub fn run(&self, phase: Phase) -> Result<Vec<StageRecord>, PipelineError> {
        if phase == Phase::Test && self.config.synthetic.is_some() {
            return Err(PipelineError::Config("the test phase needs a source and IR tree, not a synthetic corpus".into()));
        }
        self.stages(phase).into_iter().map(|s| self.run_stage(s, phase)).collect()
    }

    /// Directory holding the phase's own artifacts.
    fn dir(&self, phase: Phase) -> PathBuf {
        match phase {
            Phase::Test => self.work.join(files::TEST_DIR),
            _ => self.work.clone(),
        }
    }

    fn read(&self, path: &Path, stage: Stage) -> Result<Vec<u8>, PipelineError> {
        if !path.exists() {
            return Err(PipelineError::MissingArtifact { path: path.to_path_buf(), stage });
        }
        std::fs::read(path).map_err(io_err(path))
    }

    fn read_text(&self, path: &Path, stage: Stage) -> Result<String, PipelineError> {
        String::from_utf8(self.read(path, stage)?).map_err(|_| PipelineError::Data(format!("{}: not UTF-8", path.display())))
    }

    fn required<'a>(&self, p: &'a Option<PathBuf>, key: &str) -> Result<&'a Path, PipelineError> {
        p.as_deref().ok_or_else(|| PipelineError::Config(format!("paths.{key} is not set")))
    }

    /// Runs one stage and records it in the manifest.
    pub fn run_stage(&self, stage: Stage, phase: Phase) -> Result<StageRecord, PipelineError> {
        let started = Instant::now();
        let dir = self.dir(phase);
        let w = |name: &str| self.work.join(name);
        let d = |name: &str| dir.join(name);
        let mut inputs: Vec<PathBuf> = Vec::new();
        let mut outputs: Vec<(PathBuf, Vec<u8>)> = Vec::new();
        let paths = &self.config.paths;
        log::info!("stage {stage} ({})", if phase == Phase::Test { "test phase" } else { "learning phase" });
        match stage {
            Stage::Synthesize => {
                let cfg = self.config.synthetic.as_ref().ok_or_else(|| PipelineError::Config("no [synthetic] section".into()))?;
                let records = crate::synthetic::generate_corpus(cfg, self.seeds.derive("synthetic"));
                outputs.push((d(files::CORPUS), write_corpus(&records).into_bytes()));
            }
            Stage::Extract => {
                let text = ops::extract(self.required(&paths.source, "source")?, &self.api)?;
                outputs.push((d(files::CANDIDATES), text.into_bytes()));
            }
            Stage::IngestIr => {
                let text = ops::ingest_ir(self.required(&paths.ir, "ir")?)?;
                outputs.push((d(files::IR_INDEX), text.into_bytes()));
            }
            Stage::Slice => {
                let candidates = self.read_text(&d(files::CANDIDATES), Stage::Extract)?;
                let index = self.read_text(&d(files::IR_INDEX), Stage::IngestIr)?;
                inputs.extend([d(files::CANDIDATES), d(files::IR_INDEX)]);
                outputs.push((d(files::SLICES), ops::slice(&candidates, &index)?.into_bytes()));
            }
            Stage::Label => {
                let corpus = self.read_text(&d(files::SLICES), Stage::Slice)?;
                let truth = self.required(&paths.truth, "truth")?;
                let mapping = if self.config.data.label_first_only { LineMapping::First } else { LineMapping::All };
                inputs.push(d(files::SLICES));
                outputs.push((d(files::CORPUS), ops::label(&corpus, truth, mapping)?.0.into_bytes()));
            }
            Stage::Encode if phase == Phase::Test => {
                let records = read_corpus(&self.read_text(&d(files::SLICES), Stage::Slice)?)?;
                let table = EmbeddingTable::read(&self.read_text(&w(files::EMBEDDING), Stage::Encode)?)?;
                inputs.extend([d(files::SLICES), w(files::EMBEDDING)]);
                outputs.push((d(files::TEST), ops::encode(&records, &table, self.config.data.max_tokens, &self.api)));
            }
            Stage::Encode => {
                let producer = if self.config.synthetic.is_some() { Stage::Synthesize } else { Stage::Label };
                let records = read_corpus(&self.read_text(&d(files::CORPUS), producer)?)?;
                inputs.push(d(files::CORPUS));
                let (train, holdout) = ops::split_holdout(records, self.config.data.holdout, &self.seeds);
                // the embedding sees only the training part
                let table = ops::train_table(&train, &self.config.embedding, &self.api, self.seeds.derive("embedding"))?;
                let max = self.config.data.max_tokens;
                outputs.push((d(files::EMBEDDING), table.write().into_bytes()));
                outputs.push((d(files::TRAIN), ops::encode(&train, &table, max, &self.api)));
                outputs.push((d(files::HOLDOUT), ops::encode(&holdout, &table, max, &self.api)));
            }
            Stage::Train => {
                let samples = ops::load_dataset(&self.read(&w(files::TRAIN), Stage::Encode)?)?;
                inputs.push(w(files::TRAIN));
                let c = &self.config;
                let model = ops::train(&samples, &c.model, &c.grid, &c.train, c.detect.threshold, &self.seeds)?;
                outputs.push((w(files::MODEL), model.write()));
            }
            Stage::Detect => {
                let data = self.detect_input(phase);
                let model = Model::read(&self.read(&w(files::MODEL), Stage::Train)?)?;
                let samples = ops::load_dataset(&self.read(&data, Stage::Encode)?)?;
                inputs.extend([w(files::MODEL), data]);
                let report = ops::detect(&model, &samples, self.config.detect.threshold, self.config.detect_kappa())?;
                outputs.push((d(files::REPORT), ops::report_text(&report).into_bytes()));
            }
            Stage::Eval => {
                let report = read_report(&self.read_text(&d(files::REPORT), Stage::Detect)?)?;
                inputs.push(d(files::REPORT));
                let summary = match (&paths.truth, &self.config.synthetic) {
                    (Some(truth), None) => ops::evaluate_with_truth(&report, &load_truth(truth)?)?,
                    _ => {
                        let data = self.detect_input(phase);
                        inputs.push(data.clone());
                        ops::evaluate_with_labels(&report, &ops::load_dataset(&self.read(&data, Stage::Encode)?)?)?
                    }
                };
                outputs.push((d(files::SUMMARY), ops::summary_text(&summary).into_bytes()));
            }
        }
        for (path, bytes) in &outputs {
            std::fs::write(path, bytes).map_err(io_err(path))?;
        }
        let mut manifest = RunManifest::load_or_new(&self.work, &self.config);
        let record = StageRecord::new(stage, &self.work, &dir, &inputs, &outputs, started.elapsed())?;
        manifest.record(record.clone());
        manifest.save(&self.work)?;
        Ok(record)
    }

    fn detect_input(&self, phase: Phase) -> PathBuf {
        match phase {
            Phase::Test => self.work.join(files::TEST_DIR).join(files::TEST),
            _ if self.config.data.holdout == 0.0 => self.work.join(files::TRAIN),
            _ => self.work.join(files::HOLDOUT),
        }
    }

    /// Provenance trace of one candidate from the phase's latest detection.
    pub fn explain(&self, id: &str, phase: Phase) -> Result<Explanation, PipelineError> {
        explain::explain(self, id, phase)
    }
}
