//! `irloc`: run the vulnerability detection pipeline from the command line.
//!
//! Every stage subcommand reads and writes the work directory by default
//! and records its artifacts in `manifest.json`. Giving any of a stage's
//! path flags runs it on those files instead (unset paths still default to
//! the work directory); such runs are not recorded in the manifest.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use irloc::corpus::{load_truth, read_corpus, LineMapping};
use irloc::encoding::EmbeddingTable;
use irloc::frontend::ApiList;
use irloc::neural::{read_report, Model};
use irloc::pipeline::{files, ops, Phase, Pipeline, PipelineConfig, PipelineError, Stage};
use irloc::seed::SeedTree;
use irloc::synthetic::SyntheticConfig;

#[derive(Parser, Debug)]
#[command(name = "irloc", version, about = "Fine-grained vulnerability detection over LLVM IR slices")]
struct Cli {
    /// Pipeline configuration (TOML). Without one, the preset is used.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Settings used when no configuration file is given.
    #[arg(long, global = true, value_enum, default_value_t = Preset::Desk)]
    preset: Preset,
    /// Directory for artifacts; overrides `paths.work`.
    #[arg(short, long, global = true, env = "IRLOC_WORK_DIR")]
    work_dir: Option<PathBuf>,
    /// Root seed; overrides `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// More log output (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    /// Small model that trains on a laptop CPU.
    Desk,
    /// Full-size model: 900-token inputs, 900 hidden units.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PhaseArg {
    Learn,
    Test,
    All,
}

impl From<PhaseArg> for Phase {
    fn from(p: PhaseArg) -> Phase {
        match p {
            PhaseArg::Learn => Phase::Learn,
            PhaseArg::Test => Phase::Test,
            PhaseArg::All => Phase::All,
        }
    }
}

#[derive(Args, Debug, Clone, Copy)]
struct PhaseOpt {
    /// Phase whose work-directory artifacts the stage reads and writes.
    #[arg(long, value_enum, default_value_t = PhaseArg::Learn)]
    phase: PhaseArg,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract syntax candidates from the C sources.
    Extract {
        /// C source tree; overrides `paths.source`.
        #[arg(long)]
        src: Option<PathBuf>,
        /// Library/API names, one per line; overrides `paths.api_list`.
        #[arg(long)]
        api_list: Option<PathBuf>,
        /// Candidate file to write (default: `candidates.txt` in the work directory).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        phase: PhaseOpt,
    },
    /// Index and link the IR modules.
    IngestIr {
        /// IR tree; overrides `paths.ir`.
        #[arg(long)]
        ll: Option<PathBuf>,
        /// Module index to write (default: `ir-index.txt`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        phase: PhaseOpt,
    },
    /// Slice the IR around every syntax candidate.
    Slice {
        /// Candidate file written by `extract`.
        #[arg(long)]
        candidates: Option<PathBuf>,
        /// Module index written by `ingest-ir`.
        #[arg(long)]
        ir: Option<PathBuf>,
        /// Slice corpus to write (default: `slices.txt`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        phase: PhaseOpt,
    },
    /// Label the slices from the ground truth.
    Label {
        /// Unlabeled slices written by `slice`.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Ground-truth directory; overrides `paths.truth`.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Labeled corpus to write (default: `corpus.txt`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a labeled synthetic corpus.
    Synthesize {
        /// Number of samples; overrides `synthetic.samples`.
        #[arg(long)]
        samples: Option<usize>,
        /// Corpus to write (default: `corpus.txt`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encode a corpus into model inputs. On the work directory, the
    /// learning phase also trains the embedding and splits off the
    /// held-out candidates.
    Encode {
        /// Labeled or unlabeled corpus to encode.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Embedding dimension; overrides `embedding.dim`.
        #[arg(long)]
        dim: Option<usize>,
        /// Tokens per input; overrides `data.max_tokens`.
        #[arg(long)]
        max_tokens: Option<usize>,
        /// Embedding table: reused when the file exists, otherwise trained
        /// on the corpus and written there.
        #[arg(long)]
        embedding: Option<PathBuf>,
        /// Dataset to write.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        phase: PhaseOpt,
    },
    /// Train the detection model.
    Train {
        /// Encoded training set (default: `train.bin`).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Model file to write (default: `model.bin`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score candidates and locate vulnerable lines.
    Detect {
        /// Model written by `train`.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Encoded candidates to score.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Line threshold; overrides `detect.threshold`.
        #[arg(long)]
        threshold: Option<f64>,
        /// κ for line scores; overrides `detect.kappa`.
        #[arg(long)]
        kappa: Option<usize>,
        /// Detection report to write (default: `report.tsv`).
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        phase: PhaseOpt,
    },
    /// Compute detection metrics and IoU.
    Eval {
        /// Detection report written by `detect`.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Ground-truth directory; without one, the labels of `--data` are
        /// used.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Labeled dataset the report was computed on.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Summary to write (default: `summary.tsv`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        phase: PhaseOpt,
    },
    /// Run every stage of a phase.
    Run {
        #[arg(long, value_enum, default_value_t = PhaseArg::All)]
        phase: PhaseArg,
        /// C source tree; overrides `paths.source`.
        #[arg(long)]
        src: Option<PathBuf>,
        /// IR tree; overrides `paths.ir`.
        #[arg(long)]
        ll: Option<PathBuf>,
        /// Ground-truth directory; overrides `paths.truth`.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Use a generated corpus of this many samples instead of a project.
        #[arg(long)]
        synthetic: Option<usize>,
    },
    /// Trace one candidate from syntax candidate to detected lines.
    Explain {
        /// Candidate id, e.g. `c12`.
        id: String,
        #[arg(long, value_enum, default_value_t = PhaseArg::All)]
        phase: PhaseArg,
    },
    /// Print the effective configuration as TOML.
    Config,
}

fn absolute(p: &Path) -> PathBuf {
    if p.is_relative() {
        std::env::current_dir().map(|c| c.join(p)).unwrap_or_else(|_| p.to_path_buf())
    } else {
        p.to_path_buf()
    }
}

fn set(slot: &mut Option<PathBuf>, value: &Option<PathBuf>) {
    if let Some(v) = value {
        *slot = Some(absolute(v));
    }
}

fn configure(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => {
            let mut c = match cli.preset {
                Preset::Desk => PipelineConfig::desk(),
                Preset::Full => PipelineConfig::default(),
            };
            c.resolve(&absolute(Path::new(".")));
            c
        }
    };
    if let Some(p) = &cli.work_dir {
        config.paths.work = absolute(p);
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    let paths = &mut config.paths;
    match &cli.command {
        Command::Extract { src, api_list, .. } => {
            set(&mut paths.source, src);
            set(&mut paths.api_list, api_list);
        }
        Command::IngestIr { ll, .. } => set(&mut paths.ir, ll),
        Command::Label { truth, .. } | Command::Eval { truth, .. } => set(&mut paths.truth, truth),
        Command::Run { src, ll, truth, synthetic, .. } => {
            set(&mut paths.source, src);
            set(&mut paths.ir, ll);
            set(&mut paths.truth, truth);
            if let Some(n) = synthetic {
                config.synthetic = Some(SyntheticConfig { samples: *n, ..config.synthetic.clone().unwrap_or_default() });
            }
        }
        Command::Synthesize { samples, .. } => {
            let base = config.synthetic.clone().unwrap_or_default();
            config.synthetic = Some(SyntheticConfig { samples: samples.unwrap_or(base.samples), ..base });
        }
        Command::Encode { dim, max_tokens, .. } => {
            if let Some(d) = dim {
                config.embedding.dim = *d;
            }
            if let Some(m) = max_tokens {
                config.data.max_tokens = *m;
            }
        }
        Command::Detect { threshold, kappa, .. } => {
            if let Some(t) = threshold {
                config.detect.threshold = *t;
            }
            if kappa.is_some() {
                config.detect.kappa = *kappa;
            }
        }
        _ => {}
    }
    config.validate()?;
    Ok(config)
}

fn read(path: &Path) -> Result<Vec<u8>, PipelineError> {
    std::fs::read(path).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}

fn read_text(path: &Path) -> Result<String, PipelineError> {
    String::from_utf8(read(path)?).map_err(|_| PipelineError::Data(format!("{}: not UTF-8", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| PipelineError::Io { path: dir.to_path_buf(), source })?;
    }
    std::fs::write(path, bytes).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })?;
    println!("wrote\t{}", path.display());
    Ok(())
}

fn required<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path, PipelineError> {
    p.as_deref().ok_or_else(|| PipelineError::Config(format!("{what} is not set")))
}

/// Work-directory layout for a phase.
struct Layout {
    work: PathBuf,
    dir: PathBuf,
}

impl Layout {
    fn new(work: &Path, phase: PhaseArg) -> Self {
        let dir = if phase == PhaseArg::Test { work.join(files::TEST_DIR) } else { work.to_path_buf() };
        Layout { work: work.to_path_buf(), dir }
    }

    fn or(&self, explicit: &Option<PathBuf>, name: &str) -> PathBuf {
        explicit.as_deref().map(absolute).unwrap_or_else(|| self.dir.join(name))
    }

    fn or_work(&self, explicit: &Option<PathBuf>, name: &str) -> PathBuf {
        explicit.as_deref().map(absolute).unwrap_or_else(|| self.work.join(name))
    }

    fn dataset(&self, explicit: &Option<PathBuf>, phase: PhaseArg, holdout: f64) -> PathBuf {
        let name = match phase {
            PhaseArg::Test => files::TEST,
            _ if holdout == 0.0 => files::TRAIN,
            _ => files::HOLDOUT,
        };
        explicit.as_deref().map(absolute).unwrap_or_else(|| self.dir.join(name))
    }
}

/// Runs a stage on explicit files.
fn run_explicit(config: &PipelineConfig, api: &ApiList, command: &Command) -> Result<(), PipelineError> {
    let seeds = SeedTree::new(config.seed);
    let work = &config.paths.work;
    match command {
        Command::Extract { out, phase, .. } => {
            let text = ops::extract(required(&config.paths.source, "--src")?, api)?;
            write(&Layout::new(work, phase.phase).or(out, files::CANDIDATES), text.as_bytes())
        }
        Command::IngestIr { out, phase, .. } => {
            let text = ops::ingest_ir(required(&config.paths.ir, "--ll")?)?;
            write(&Layout::new(work, phase.phase).or(out, files::IR_INDEX), text.as_bytes())
        }
        Command::Slice { candidates, ir, out, phase } => {
            let l = Layout::new(work, phase.phase);
            let text = ops::slice(&read_text(&l.or(candidates, files::CANDIDATES))?, &read_text(&l.or(ir, files::IR_INDEX))?)?;
            write(&l.or(out, files::SLICES), text.as_bytes())
        }
        Command::Label { corpus, out, .. } => {
            let l = Layout::new(work, PhaseArg::Learn);
            let mapping = if config.data.label_first_only { LineMapping::First } else { LineMapping::All };
            let (text, stats) = ops::label(&read_text(&l.or(corpus, files::SLICES))?, required(&config.paths.truth, "--truth")?, mapping)?;
            println!("labeled\t{} vulnerable\t{} clean\t{} excluded", stats.vulnerable, stats.clean, stats.excluded);
            write(&l.or(out, files::CORPUS), text.as_bytes())
        }
        Command::Synthesize { out, .. } => {
            let cfg = config.synthetic.clone().unwrap_or_default();
            let records = irloc::synthetic::generate_corpus(&cfg, seeds.derive("synthetic"));
            write(&Layout::new(work, PhaseArg::Learn).or(out, files::CORPUS), irloc::corpus::write_corpus(&records).as_bytes())
        }
        Command::Encode { corpus, embedding, out, phase, .. } => {
            let l = Layout::new(work, phase.phase);
            let default_corpus = if phase.phase == PhaseArg::Test { files::SLICES } else { files::CORPUS };
            let records = read_corpus(&read_text(&l.or(corpus, default_corpus))?)?;
            let table_path = l.or_work(embedding, files::EMBEDDING);
            let table = if table_path.exists() {
                EmbeddingTable::read(&read_text(&table_path)?)?
            } else {
                let table = ops::train_table(&records, &config.embedding, api, seeds.derive("embedding"))?;
                write(&table_path, table.write().as_bytes())?;
                table
            };
            let default_out = if phase.phase == PhaseArg::Test { files::TEST } else { files::TRAIN };
            write(&l.or(out, default_out), &ops::encode(&records, &table, config.data.max_tokens, api))
        }
        Command::Train { data, out } => {
            let l = Layout::new(work, PhaseArg::Learn);
            let samples = ops::load_dataset(&read(&l.or(data, files::TRAIN))?)?;
            let model = ops::train(&samples, &config.model, &config.grid, &config.train, config.detect.threshold, &seeds)?;
            write(&l.or(out, files::MODEL), &model.write())
        }
        Command::Detect { model, data, report, phase, .. } => {
            let l = Layout::new(work, phase.phase);
            let m = Model::read(&read(&l.or_work(model, files::MODEL))?)?;
            let samples = ops::load_dataset(&read(&l.dataset(data, phase.phase, config.data.holdout))?)?;
            let r = ops::detect(&m, &samples, config.detect.threshold, config.detect_kappa())?;
            write(&l.or(report, files::REPORT), ops::report_text(&r).as_bytes())
        }
        Command::Eval { report, data, out, phase, .. } => {
            let l = Layout::new(work, phase.phase);
            let r = read_report(&read_text(&l.or(report, files::REPORT))?)?;
            let summary = match &config.paths.truth {
                Some(truth) if config.synthetic.is_none() => ops::evaluate_with_truth(&r, &load_truth(truth)?)?,
                _ => ops::evaluate_with_labels(&r, &ops::load_dataset(&read(&l.dataset(data, phase.phase, config.data.holdout))?)?)?,
            };
            write(&l.or(out, files::SUMMARY), ops::summary_text(&summary).as_bytes())
        }
        _ => unreachable!("not a stage command"),
    }
}

/// The stage and phase of a stage command, when none of its path flags
/// is given.
fn work_dir_stage(command: &Command) -> Option<(Stage, Phase)> {
    let p = |o: &PhaseOpt| Phase::from(o.phase);
    match command {
        Command::Extract { src: None, api_list: None, out: None, phase } => Some((Stage::Extract, p(phase))),
        Command::IngestIr { ll: None, out: None, phase } => Some((Stage::IngestIr, p(phase))),
        Command::Slice { candidates: None, ir: None, out: None, phase } => Some((Stage::Slice, p(phase))),
        Command::Label { corpus: None, truth: None, out: None } => Some((Stage::Label, Phase::Learn)),
        Command::Synthesize { out: None, .. } => Some((Stage::Synthesize, Phase::Learn)),
        Command::Encode { corpus: None, embedding: None, out: None, phase, .. } => Some((Stage::Encode, p(phase))),
        Command::Train { data: None, out: None } => Some((Stage::Train, Phase::Learn)),
        Command::Detect { model: None, data: None, report: None, phase, .. } => Some((Stage::Detect, p(phase))),
        Command::Eval { report: None, truth: None, data: None, out: None, phase } => Some((Stage::Eval, p(phase))),
        _ => None,
    }
}

fn execute(cli: &Cli) -> Result<(), PipelineError> {
    let config = configure(cli)?;
    if let Command::Config = cli.command {
        print!("{}", config.to_toml());
        return Ok(());
    }
    match &cli.command {
        Command::Run { phase, .. } => {
            let pipeline = Pipeline::new(config)?;
            let phase = Phase::from(*phase);
            for record in pipeline.run(phase)? {
                println!("{}\t{} ms", record.stage, record.millis);
            }
            if pipeline.stages(phase).contains(&Stage::Eval) {
                let dir = if phase == Phase::Test { pipeline.work_dir().join(files::TEST_DIR) } else { pipeline.work_dir().to_path_buf() };
                let text = read_text(&dir.join(files::SUMMARY))?;
                println!("{}", text.split("\n\n").next().unwrap_or(""));
            }
            Ok(())
        }
        Command::Explain { id, phase } => {
            print!("{}", Pipeline::new(config)?.explain(id, (*phase).into())?);
            Ok(())
        }
        command => match work_dir_stage(command) {
            Some((stage, phase)) => {
                let record = Pipeline::new(config)?.run_stage(stage, phase)?;
                for path in record.outputs.keys() {
                    println!("wrote\t{path}");
                }
                Ok(())
            }
            None => {
                let api = match &config.paths.api_list {
                    Some(p) => ApiList::load(p)?,
                    None => ApiList::default(),
                };
                run_explicit(&config, &api, command)
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("irloc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
