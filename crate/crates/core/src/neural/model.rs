//! Parameters, per-sample loss and gradient, and the model file.
//!
//! Model file layout (little-endian):
//!
//! ```text
//! magic   8 bytes "IRLMODEL"
//! version u32
//! header  u32 length + JSON {config, input_dim, max_tokens}
//! params  u64 count + f64 values in [`Layout`] order
//! ```

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layout::Layout;
use super::network::{backward, forward};
use super::{kmax_selection, ModelConfig, NeuralError};

pub const MODEL_MAGIC: &[u8; 8] = b"IRLMODEL";
pub const MODEL_VERSION: u32 = 1;

/// Probabilities are clamped this far from 0 and 1 inside the loss.
const EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ModelConfig,
    input_dim: usize,
    max_tokens: usize,
    layout: Layout,
    params: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    input_dim: usize,
    max_tokens: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleGradient {
    pub loss: f64,
    /// The pooled score.
    pub score: f64,
    pub grad: Vec<f64>,
}

impl Model {
    /// All-zero parameters: every activation is exactly 0.5.
    pub fn zeros(config: ModelConfig, input_dim: usize, max_tokens: usize) -> Result<Self, NeuralError> {
        if config.kappa == 0 || config.kappa > max_tokens {
            return Err(NeuralError::Config(format!("κ={} must lie in 1..={max_tokens}", config.kappa)));
        }
        if !(0.0..1.0).contains(&config.dropout) {
            return Err(NeuralError::Config(format!("dropout {} must lie in [0, 1)", config.dropout)));
        }
        if config.hidden == 0 && config.layers > 0 || input_dim == 0 {
            return Err(NeuralError::Config("hidden size and input dimension must be positive".into()));
        }
        let layout = Layout::new(&config, input_dim);
        let params = vec![0.0; layout.total];
        Ok(Model { config, input_dim, max_tokens, layout, params })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn new(config: ModelConfig, input_dim: usize, max_tokens: usize, seed: u64) -> Result<Self, NeuralError> {
        let mut m = Model::zeros(config, input_dim, max_tokens)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..m.params.len() {
            let (fan_in, fan_out) = m.layout.fan(i);
            if fan_in + fan_out > 0 {
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                m.params[i] = rng.gen_range(-limit..limit);
            }
        }
        Ok(m)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn rows(&self, x: &[f64]) -> Result<usize, NeuralError> {
        if x.is_empty() || x.len() % self.input_dim != 0 {
            return Err(NeuralError::Shape(format!("{} inputs are not rows of width {}", x.len(), self.input_dim)));
        }
        Ok(x.len() / self.input_dim)
    }

    /// Per-token activations without dropout.
    pub fn activations(&self, x: &[f64]) -> Result<Vec<f64>, NeuralError> {
        let len = self.rows(x)?;
        Ok(forward::<ChaCha8Rng>(&self.layout, &self.params, x, len, None).acts)
    }

    /// Binary cross-entropy of the masked κ-max score against `target`, and
    /// its exact gradient. `dropout` supplies the generator for the dropout
    /// masks; `None` disables dropout.
    pub fn loss_and_gradient(&self, x: &[f64], mask: &[f64], target: f64, dropout: Option<&mut ChaCha8Rng>) -> Result<SampleGradient, NeuralError> {
        let len = self.rows(x)?;
        if mask.len() != len {
            return Err(NeuralError::Shape(format!("{} mask entries for {len} tokens", mask.len())));
        }
        let kappa = self.config.kappa;
        if kappa > len {
            return Err(NeuralError::Shape(format!("κ={kappa} for {len} tokens")));
        }
        let trace = forward(&self.layout, &self.params, x, len, dropout.map(|r| (self.config.dropout, r)));
        let m: Vec<f64> = trace.acts.iter().zip(mask).map(|(a, b)| a * b).collect();
        let sel = kmax_selection(&m, kappa);
        let score = sel.iter().map(|&i| m[i]).sum::<f64>() / kappa as f64;
        let clamped = score.clamp(EPS, 1.0 - EPS);
        let loss = -(target * clamped.ln() + (1.0 - target) * (1.0 - clamped).ln());
        let dscore = if clamped == score { (score - target) / (score * (1.0 - score)) } else { 0.0 };
        let mut da = vec![0.0; len];
        for &i in &sel {
            da[i] = dscore / kappa as f64 * mask[i];
        }
        let grad = backward(&self.layout, &self.params, &trace, &da);
        Ok(SampleGradient { loss, score, grad })
    }

    pub fn write(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + self.params.len() * 8);
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        let header = Header { config: self.config.clone(), input_dim: self.input_dim, max_tokens: self.max_tokens };
        let json = serde_json::to_vec(&header).expect("header serializes");
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        out.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn read(bytes: &[u8]) -> Result<Self, NeuralError> {
        let bad = |m: &str| NeuralError::Format(m.to_string());
        let mut pos = 0;
        let mut take = |n: usize| -> Result<&[u8], NeuralError> {
            let s = bytes.get(pos..pos + n).ok_or_else(|| bad("truncated"))?;
            pos += n;
            Ok(s)
        };
        if take(8)? != MODEL_MAGIC {
            return Err(bad("not a model file (bad magic)"));
        }
        let version = u32::from_le_bytes(take(4)?.try_into().expect("4 bytes"));
        if version != MODEL_VERSION {
            return Err(NeuralError::Format(format!("unsupported model version {version}")));
        }
        let n = u32::from_le_bytes(take(4)?.try_into().expect("4 bytes")) as usize;
        let header: Header = serde_json::from_slice(take(n)?).map_err(|e| NeuralError::Format(format!("bad header: {e}")))?;
        let mut model = Model::zeros(header.config, header.input_dim, header.max_tokens)?;
        let count = u64::from_le_bytes(take(8)?.try_into().expect("8 bytes")) as usize;
        if count != model.params.len() {
            return Err(NeuralError::Format(format!("{count} parameters, the configuration needs {}", model.params.len())));
        }
        for p in model.params.iter_mut() {
            *p = f64::from_le_bytes(take(8)?.try_into().expect("8 bytes"));
        }
        if pos != bytes.len() {
            return Err(bad("trailing bytes"));
        }
        Ok(model)
    }
}
