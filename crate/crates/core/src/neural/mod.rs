//! The location-aware bidirectional recurrent network.
//!
//! Per token: stacked bidirectional GRU (or LSTM) layers, a tanh dense
//! layer and a sigmoid give an activation `a_t`. Training multiplies the
//! activations by the location mask `α`, pools the κ largest products and
//! averages them into one score `o`, and minimises binary cross-entropy on
//! `o`. Detection skips the mask and scores every statement by its own κ
//! largest activations.
//!
//! ```
//! use irloc::neural::{kmax_average, multiply_layer};
//!
//! let a = [0.2, 0.9, 0.4];
//! assert_eq!(multiply_layer(&a, &[0.0, 1.0, 0.0]).unwrap(), [0.0, 0.9, 0.0]);
//! assert_eq!(multiply_layer(&a, &[1.0; 3]).unwrap(), a);
//! assert_eq!(kmax_average(&a, 1).unwrap(), 0.9);
//! assert!((kmax_average(&[0.1, 0.7, 0.5], 2).unwrap() - 0.6).abs() < 1e-15);
//! ```

mod config;
mod detect;
mod layout;
mod model;
mod network;
mod train;

pub use config::{CellKind, ModelConfig, TrainConfig};
pub use detect::{detect, detect_sample, line_scores, read_report, write_report, DetectionEntry, DetectionReport, LineScore, REPORT_HEADER};
pub use layout::{DirBlock, Layout};
pub use model::{Model, SampleGradient, MODEL_MAGIC, MODEL_VERSION};
pub use train::{cross_validate, prepare_samples, train, train_model, CvResult, EpochStats, Prepared};

#[derive(Debug, thiserror::Error)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no usable training samples")]
    NoSamples,
    #[error("non-finite loss in epoch {epoch}, batch {batch}")]
    NonFinite { epoch: usize, batch: usize },
    #[error("model file: {0}")]
    Format(String),
}

/// Elementwise product of activations and mask: `A · diag(α)`.
pub fn multiply_layer(acts: &[f64], mask: &[f64]) -> Result<Vec<f64>, NeuralError> {
    if acts.len() != mask.len() {
        return Err(NeuralError::Shape(format!("{} activations, {} mask entries", acts.len(), mask.len())));
    }
    Ok(acts.iter().zip(mask).map(|(a, m)| a * m).collect())
}

/// Indices of the κ largest values, largest first; equal values are
/// taken in index order.
pub fn kmax_selection(values: &[f64], kappa: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(kappa);
    idx
}

/// Mean of the κ largest values.
pub fn kmax_average(values: &[f64], kappa: usize) -> Result<f64, NeuralError> {
    if kappa == 0 || kappa > values.len() {
        return Err(NeuralError::Shape(format!("κ={kappa} for {} values", values.len())));
    }
    let sel = kmax_selection(values, kappa);
    Ok(sel.iter().map(|&i| values[i]).sum::<f64>() / kappa as f64)
}
