//! Stage operations on artifact contents, independent of where the
//! artifacts live. The command-line subcommands and [`super::Pipeline`]
//! both call these.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;

use super::PipelineError;
use crate::corpus::{label_candidate, load_truth, read_corpus, truth_for, write_corpus, GroundTruth, LabeledCandidate, LineMapping};
use crate::encoding::{encode_records, read_dataset, token_streams, train_embedding, write_dataset, EmbeddingConfig, EmbeddingTable, EncodedSample};
use crate::evaluation::{aggregate_report, write_summary, Prediction, Summary, Truth};
use crate::frontend::{extract_dir, read_candidates, write_candidates, ApiList};
use crate::ir::{read_index, write_index, ModuleIndex};
use crate::neural::{cross_validate, detect as run_detection, train as train_network, write_report, DetectionReport, Model, ModelConfig, TrainConfig};
use crate::seed::SeedTree;
use crate::slicing::generate_isevcs;

/// Candidate file for every `.c`/`.h` file below `source`.
pub fn extract(source: &Path, api: &ApiList) -> Result<String, PipelineError> {
    let candidates = extract_dir(source, api)?;
    log::info!("extracted {} syntax candidates", candidates.len());
    Ok(write_candidates(&candidates))
}

/// Module index for every `.ll` file below `ir`.
pub fn ingest_ir(ir: &Path) -> Result<String, PipelineError> {
    let (index, groups) = ModuleIndex::build(ir)?;
    log::info!("indexed {} modules in {} groups", index.entries.len(), groups.len());
    Ok(write_index(&index))
}

/// Unlabeled corpus of semantic candidates.
pub fn slice(candidates: &str, index: &str) -> Result<String, PipelineError> {
    let candidates = read_candidates(candidates)?;
    let groups = read_index(index)?.load_groups()?;
    let outcome = generate_isevcs(&candidates, &groups)?;
    if !outcome.skipped.is_empty() {
        log::warn!("{} candidates could not be placed in the IR", outcome.skipped.len());
    }
    log::info!("sliced {} semantic candidates", outcome.candidates.len());
    let records: Vec<LabeledCandidate> = outcome.candidates.into_iter().map(|candidate| LabeledCandidate { candidate, label: None }).collect();
    Ok(write_corpus(&records))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelStats {
    pub vulnerable: usize,
    pub clean: usize,
    /// Left out because their program's fix only adds lines.
    pub excluded: usize,
}

pub fn label_records(records: Vec<LabeledCandidate>, truth: &BTreeMap<String, GroundTruth>, mapping: LineMapping) -> (Vec<LabeledCandidate>, LabelStats) {
    let mut stats = LabelStats::default();
    let mut out = Vec::with_capacity(records.len());
    for mut r in records {
        let t = truth_for(&r.candidate, truth);
        if t.is_some_and(|t| t.addition_only) {
            stats.excluded += 1;
            continue;
        }
        let label = label_candidate(&r.candidate, t, mapping);
        if label.is_empty() {
            stats.clean += 1;
        } else {
            stats.vulnerable += 1;
        }
        r.label = Some(label);
        out.push(r);
    }
    (out, stats)
}

/// Labels an unlabeled corpus from a truth directory.
pub fn label(corpus: &str, truth_dir: &Path, mapping: LineMapping) -> Result<(String, LabelStats), PipelineError> {
    let truth = load_truth(truth_dir)?;
    let (records, stats) = label_records(read_corpus(corpus)?, &truth, mapping);
    log::info!("labeled {} vulnerable and {} clean candidates; {} excluded", stats.vulnerable, stats.clean, stats.excluded);
    Ok((write_corpus(&records), stats))
}

/// Trains the embedding on the corpus token streams.
pub fn train_table(records: &[LabeledCandidate], config: &EmbeddingConfig, api: &ApiList, seed: u64) -> Result<EmbeddingTable, PipelineError> {
    let streams: Vec<Vec<String>> = token_streams(records, api).into_iter().map(|s| s.tokens).collect();
    Ok(train_embedding(&streams, config, seed)?)
}

/// Splits records into training and held-out parts; each keeps corpus order.
pub fn split_holdout(records: Vec<LabeledCandidate>, fraction: f64, seeds: &SeedTree) -> (Vec<LabeledCandidate>, Vec<LabeledCandidate>) {
    let held = (records.len() as f64 * fraction).round() as usize;
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut seeds.rng("split"));
    let mut is_held = vec![false; records.len()];
    for &i in &order[..held] {
        is_held[i] = true;
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (r, h) in records.into_iter().zip(is_held) {
        if h {
            test.push(r);
        } else {
            train.push(r);
        }
    }
    (train, test)
}

pub fn encode(records: &[LabeledCandidate], table: &EmbeddingTable, max_tokens: usize, api: &ApiList) -> Vec<u8> {
    write_dataset(&encode_records(records, table, max_tokens, api), max_tokens, table.dim())
}

pub fn load_dataset(bytes: &[u8]) -> Result<Vec<EncodedSample>, PipelineError> {
    Ok(read_dataset(bytes)?.2)
}

/// Trains a model; with `folds ≥ 2` and a non-empty grid, first picks the
/// best configuration of `grid` (plus `model`) by cross-validation.
pub fn train(
    samples: &[EncodedSample],
    model: &ModelConfig,
    grid: &[ModelConfig],
    config: &TrainConfig,
    threshold: f64,
    seeds: &SeedTree,
) -> Result<Model, PipelineError> {
    let mut chosen = model.clone();
    if config.folds >= 2 && !grid.is_empty() {
        let mut candidates = vec![model.clone()];
        candidates.extend(grid.iter().cloned());
        let cv = cross_validate(samples, &candidates, config, config.folds, threshold, &seeds.child("cv"))?;
        log::info!("cross-validation picked configuration {} (mean F1 {:.4})", cv.best, cv.scores[cv.best]);
        chosen = candidates[cv.best].clone();
    }
    let (model, stats) = train_network(samples, &chosen, config, &seeds.child("train"))?;
    if let Some(last) = stats.last() {
        log::info!("trained {} epochs, final mean loss {:.6}", last.epoch, last.mean_loss);
    }
    Ok(model)
}

pub fn detect(model: &Model, samples: &[EncodedSample], threshold: f64, kappa: usize) -> Result<DetectionReport, PipelineError> {
    let report = run_detection(model, samples, threshold, kappa)?;
    let flagged = report.entries.iter().filter(|e| e.vulnerable).count();
    log::info!("{flagged} of {} candidates detected as vulnerable", report.entries.len());
    Ok(report)
}

pub fn report_text(report: &DetectionReport) -> String {
    write_report(report)
}

fn predictions(report: &DetectionReport) -> Vec<Prediction> {
    report.entries.iter().map(|e| Prediction { id: e.id.clone(), vulnerable: e.vulnerable, detected: e.detected_lines.clone() }).collect()
}

/// Evaluates against a truth directory: U is the set of covered source
/// lines that the truth marks vulnerable. Candidates of programs whose fix
/// only adds lines are left out.
pub fn evaluate_with_truth(report: &DetectionReport, truth: &BTreeMap<String, GroundTruth>) -> Result<Summary, PipelineError> {
    let mut kept = DetectionReport { entries: Vec::new(), ..report.clone() };
    let mut truths = Vec::new();
    for e in &report.entries {
        let t = truth.get(&e.program);
        if t.is_some_and(|t| t.addition_only) {
            continue;
        }
        let lines: std::collections::BTreeSet<_> =
            e.covered.iter().filter(|(f, l)| t.is_some_and(|t| t.contains(f, *l))).cloned().collect();
        truths.push(Truth { id: e.id.clone(), program: e.program.clone(), vulnerable: !lines.is_empty(), lines });
        kept.entries.push(e.clone());
    }
    Ok(aggregate_report(&predictions(&kept), &truths)?)
}

/// Evaluates against the labels carried by the detected samples.
pub fn evaluate_with_labels(report: &DetectionReport, samples: &[EncodedSample]) -> Result<Summary, PipelineError> {
    let truths: Vec<Truth> = samples
        .iter()
        .map(|s| {
            if s.label.is_none() {
                return Err(PipelineError::Data(format!("{}: sample is unlabeled; evaluate against a truth directory", s.id)));
            }
            Ok(Truth { id: s.id.clone(), program: s.program.clone(), vulnerable: s.is_vulnerable(), lines: s.labeled_lines() })
        })
        .collect::<Result<_, _>>()?;
    Ok(aggregate_report(&predictions(report), &truths)?)
}

pub fn summary_text(summary: &Summary) -> String {
    write_summary(summary)
}
