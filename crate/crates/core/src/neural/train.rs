//! Minibatch ADAMAX training and k-fold model selection.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{detect, Model, ModelConfig, NeuralError, TrainConfig};
use crate::encoding::{build_mask, EncodedSample, MaskError};
use crate::evaluation::{aggregate_report, Prediction, Truth};
use crate::seed::SeedTree;

/// A sample ready for training: its mask and 0/1 target.
#[derive(Debug, Clone)]
pub struct Prepared<'a> {
    pub sample: &'a EncodedSample,
    pub mask: Vec<f64>,
    pub target: f64,
}

/// Builds masks; samples without a usable mask are left out with a warning.
pub fn prepare_samples(samples: &[EncodedSample]) -> Vec<Prepared<'_>> {
    let mut out = Vec::with_capacity(samples.len());
    for s in samples {
        match build_mask(s) {
            Ok(mask) => out.push(Prepared { sample: s, mask, target: if s.is_vulnerable() { 1.0 } else { 0.0 } }),
            Err(e @ MaskError::OutsideWindow { .. }) => log::warn!("{e}; excluded from training"),
            Err(e @ MaskError::Unlabeled(_)) => log::warn!("{e}; excluded from training"),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean per-sample loss over the epoch, with dropout active.
    pub mean_loss: f64,
}

/// Trains a freshly initialised model.
pub fn train(samples: &[EncodedSample], model: &ModelConfig, config: &TrainConfig, seeds: &SeedTree) -> Result<(Model, Vec<EpochStats>), NeuralError> {
    let first = samples.first().ok_or(NeuralError::NoSamples)?;
    let init = Model::new(model.clone(), first.dim, first.max_tokens, seeds.derive("init"))?;
    train_model(init, samples, config, seeds)
}

/// Continues training `model`. Per-sample gradients of a batch are computed
/// in parallel and summed in batch order, so the result does not depend
/// on the thread count.
pub fn train_model(mut model: Model, samples: &[EncodedSample], config: &TrainConfig, seeds: &SeedTree) -> Result<(Model, Vec<EpochStats>), NeuralError> {
    if config.batch == 0 || config.learning_rate <= 0.0 {
        return Err(NeuralError::Config("batch must be ≥ 1 and the learning rate positive".into()));
    }
    if let Some(s) = samples.iter().find(|s| s.dim != model.input_dim() || s.max_tokens != model.max_tokens()) {
        return Err(NeuralError::Shape(format!(
            "{}: sample is {}×{}, model expects {}×{}",
            s.id,
            s.max_tokens,
            s.dim,
            model.max_tokens(),
            model.input_dim()
        )));
    }
    let prepared = prepare_samples(samples);
    if config.epochs == 0 {
        return Ok((model, Vec::new()));
    }
    if prepared.is_empty() {
        return Err(NeuralError::NoSamples);
    }
    let positives = prepared.iter().filter(|p| p.target > 0.5).count();
    if positives == 0 || positives == prepared.len() {
        log::warn!("training set holds a single class ({positives} of {} vulnerable)", prepared.len());
    }
    let n = model.params().len();
    let mut m = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut step = 0i32;
    let mut stats = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    for epoch in 0..config.epochs {
        order.sort_unstable();
        order.shuffle(&mut seeds.rng(&format!("shuffle/{epoch}")));
        let mut total_loss = 0.0;
        for (b, batch) in order.chunks(config.batch).enumerate() {
            let results: Vec<_> = batch
                .par_iter()
                .map(|&i| {
                    let p = &prepared[i];
                    let mut rng = seeds.rng(&format!("dropout/{epoch}/{i}"));
                    model.loss_and_gradient(&p.sample.inputs, &p.mask, p.target, Some(&mut rng))
                })
                .collect::<Result<_, _>>()?;
            let mut grad = vec![0.0; n];
            let mut batch_loss = 0.0;
            for r in &results {
                batch_loss += r.loss;
                grad.iter_mut().zip(&r.grad).for_each(|(g, v)| *g += v);
            }
            if !batch_loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(NeuralError::NonFinite { epoch, batch: b });
            }
            total_loss += batch_loss;
            let scale = 1.0 / batch.len() as f64;
            step += 1;
            let lr = config.learning_rate / (1.0 - config.beta1.powi(step));
            for (k, p) in model.params_mut().iter_mut().enumerate() {
                let g = grad[k] * scale;
                m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g;
                u[k] = (config.beta2 * u[k]).max(g.abs());
                *p -= lr * m[k] / (u[k] + 1e-8);
            }
        }
        let mean_loss = total_loss / prepared.len() as f64;
        log::info!("epoch {}: mean loss {mean_loss:.6}", epoch + 1);
        stats.push(EpochStats { epoch: epoch + 1, mean_loss });
    }
    Ok((model, stats))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    /// Fold-averaged F1 per candidate configuration; folds where F1 is
    /// undefined count as 0.
    pub scores: Vec<f64>,
    pub best: usize,
}

/// k-fold cross-validation over a grid of model configurations; picks the
/// configuration with the highest mean F1 (earliest on ties).
pub fn cross_validate(
    samples: &[EncodedSample],
    grid: &[ModelConfig],
    config: &TrainConfig,
    folds: usize,
    threshold: f64,
    seeds: &SeedTree,
) -> Result<CvResult, NeuralError> {
    if folds < 2 || samples.len() < folds || grid.is_empty() {
        return Err(NeuralError::Config(format!("{folds}-fold cross-validation over {} samples and {} configurations", samples.len(), grid.len())));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut seeds.rng("folds"));
    let mut fold_of = vec![0; samples.len()];
    for (rank, &i) in order.iter().enumerate() {
        fold_of[i] = rank % folds;
    }
    let mut scores = Vec::with_capacity(grid.len());
    for (c, cfg) in grid.iter().enumerate() {
        let mut total = 0.0;
        for f in 0..folds {
            let train_set: Vec<EncodedSample> = samples.iter().zip(&fold_of).filter(|(_, &k)| k != f).map(|(s, _)| s.clone()).collect();
            let test_set: Vec<EncodedSample> = samples.iter().zip(&fold_of).filter(|(_, &k)| k == f).map(|(s, _)| s.clone()).collect();
            let (model, _) = train(&train_set, cfg, config, &seeds.child(&format!("config{c}/fold{f}")))?;
            let report = detect(&model, &test_set, threshold, cfg.kappa)?;
            let predictions: Vec<Prediction> = report
                .entries
                .iter()
                .map(|e| Prediction { id: e.id.clone(), vulnerable: e.vulnerable, detected: e.detected_lines.clone() })
                .collect();
            let truths: Vec<Truth> = test_set
                .iter()
                .map(|s| Truth { id: s.id.clone(), program: s.program.clone(), vulnerable: s.is_vulnerable(), lines: s.labeled_lines() })
                .collect();
            let summary = aggregate_report(&predictions, &truths).map_err(|e| NeuralError::Config(e.to_string()))?;
            total += summary.metrics.f1.unwrap_or(0.0);
        }
        let mean = total / folds as f64;
        log::info!("configuration {c}: mean F1 {mean:.4} over {folds} folds");
        scores.push(mean);
    }
    let best = (0..scores.len()).fold(0, |b, i| if scores[i] > scores[b] { i } else { b });
    Ok(CvResult { scores, best })
}
