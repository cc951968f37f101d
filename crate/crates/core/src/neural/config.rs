//! Network and training hyperparameters.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Gru,
    Lstm,
}

impl CellKind {
    /// Gate blocks per cell: update/reset/candidate or input/forget/cell/output.
    pub fn gates(self) -> usize {
        match self {
            CellKind::Gru => 3,
            CellKind::Lstm => 4,
        }
    }
}

/// Shape of the network. Defaults are the full-size settings; see
/// [`ModelConfig::desk`] for a configuration that trains in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub cell: CellKind,
    /// Stacked bidirectional layers.
    pub layers: usize,
    /// Hidden units per direction.
    pub hidden: usize,
    /// Width of the tanh dense layer between the recurrent output and the
    /// per-token sigmoid; 0 connects the recurrent output directly.
    pub dense: usize,
    /// κ of the κ-max pooling.
    pub kappa: usize,
    /// Dropout rate on each recurrent layer's output during training.
    pub dropout: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { cell: CellKind::Gru, layers: 2, hidden: 900, dense: 512, kappa: 1, dropout: 0.4 }
    }
}

impl ModelConfig {
    pub fn desk() -> Self {
        ModelConfig { hidden: 32, dense: 32, ..ModelConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    /// Cross-validation folds for hyperparameter selection; 0 disables it.
    pub folds: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { batch: 16, learning_rate: 0.002, epochs: 10, beta1: 0.9, beta2: 0.999, folds: 0 }
    }
}
