//! Skip-gram word embedding trained with negative sampling.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EncodingError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub dim: usize,
    /// Context words on each side of the center word.
    pub window: usize,
    /// Negative samples per positive pair.
    pub negatives: usize,
    pub epochs: usize,
    pub min_count: usize,
    /// Initial learning rate, decayed linearly to 1e-4 of itself.
    pub learning_rate: f64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig { dim: 30, window: 5, negatives: 5, epochs: 5, min_count: 1, learning_rate: 0.025 }
    }
}

/// Symbol vectors. Symbols not in the table embed as zero vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    seed: u64,
    symbols: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<f64>,
}

pub const EMBEDDING_HEADER: &str = "# irloc embedding v1";

impl EmbeddingTable {
    pub fn new(dim: usize, seed: u64, symbols: Vec<String>, vectors: Vec<f64>) -> Result<Self, EncodingError> {
        if vectors.len() != symbols.len() * dim {
            return Err(EncodingError::Format(format!("{} values for {} symbols of dimension {dim}", vectors.len(), symbols.len())));
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(EncodingError::Format(format!("symbol `{s}` appears twice")));
            }
        }
        Ok(EmbeddingTable { dim, seed, symbols, index, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn get(&self, symbol: &str) -> Option<&[f64]> {
        self.index.get(symbol).map(|&i| &self.vectors[i * self.dim..(i + 1) * self.dim])
    }

    /// Writes the vector of `symbol` into `out`, zeros when unknown.
    pub fn embed_into(&self, symbol: &str, out: &mut [f64]) {
        match self.get(symbol) {
            Some(v) => out.copy_from_slice(v),
            None => out.fill(0.0),
        }
    }

    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        let (x, y) = (self.get(a)?, self.get(b)?);
        let dot: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        Some(dot / (nx * ny))
    }

    /// Text form: a header with dimension, vocabulary size and seed, then
    /// one `symbol<TAB>v1<TAB>…<TAB>vd` row per symbol.
    pub fn write(&self) -> String {
        let mut out = format!("{EMBEDDING_HEADER} dim={} vocab={} seed={}\n", self.dim, self.len(), self.seed);
        for (i, s) in self.symbols.iter().enumerate() {
            out.push_str(s);
            for v in &self.vectors[i * self.dim..(i + 1) * self.dim] {
                let _ = write!(out, "\t{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn read(text: &str) -> Result<Self, EncodingError> {
        let bad = |line: usize, m: &str| EncodingError::Format(format!("embedding line {line}: {m}"));
        let mut lines = text.lines();
        let header = lines.next().and_then(|h| h.strip_prefix(EMBEDDING_HEADER)).ok_or_else(|| bad(1, "missing header"))?;
        let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
        for f in header.split_whitespace() {
            let (k, v) = f.split_once('=').ok_or_else(|| bad(1, "bad header field"))?;
            fields.insert(k, v);
        }
        let num = |k: &str| -> Result<u64, EncodingError> {
            fields.get(k).and_then(|v| v.parse().ok()).ok_or_else(|| bad(1, &format!("missing or bad `{k}`")))
        };
        let (dim, vocab, seed) = (num("dim")? as usize, num("vocab")? as usize, num("seed")?);
        let mut symbols = Vec::with_capacity(vocab);
        let mut vectors = Vec::with_capacity(vocab * dim);
        for (no, line) in lines.enumerate() {
            let mut parts = line.split('\t');
            symbols.push(parts.next().unwrap_or_default().to_string());
            let before = vectors.len();
            for p in parts {
                vectors.push(p.parse::<f64>().map_err(|_| bad(no + 2, "bad number"))?);
            }
            if vectors.len() - before != dim {
                return Err(bad(no + 2, &format!("expected {dim} values")));
            }
        }
        if symbols.len() != vocab {
            return Err(bad(1, &format!("header promises {vocab} symbols, found {}", symbols.len())));
        }
        EmbeddingTable::new(dim, seed, symbols, vectors)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x.clamp(-30.0, 30.0)).exp())
}

/// Trains skip-gram with negative sampling over token streams. Single
/// threaded, so the result depends only on the corpus and the seed.
pub fn train_embedding(streams: &[Vec<String>], config: &EmbeddingConfig, seed: u64) -> Result<EmbeddingTable, EncodingError> {
    let dim = config.dim;
    if dim == 0 {
        return Err(EncodingError::Config("embedding dimension must be positive".into()));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for s in streams {
        for t in s {
            *counts.entry(t).or_default() += 1;
        }
    }
    let mut vocab: Vec<(&str, usize)> = counts.into_iter().filter(|&(_, c)| c >= config.min_count.max(1)).collect();
    if vocab.is_empty() {
        return Err(EncodingError::EmptyCorpus);
    }
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let index: HashMap<&str, usize> = vocab.iter().enumerate().map(|(i, (s, _))| (*s, i)).collect();
    let n = vocab.len();

    // cumulative unigram^0.75 distribution for negatives
    let mut cumulative = Vec::with_capacity(n);
    let mut acc = 0.0;
    for &(_, c) in &vocab {
        acc += (c as f64).powf(0.75);
        cumulative.push(acc);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut input: Vec<f64> = (0..n * dim).map(|_| (rng.gen::<f64>() - 0.5) / dim as f64).collect();
    let mut output = vec![0.0; n * dim];

    let encoded: Vec<Vec<usize>> =
        streams.iter().map(|s| s.iter().filter_map(|t| index.get(t.as_str()).copied()).collect()).collect();
    let total_words: usize = encoded.iter().map(Vec::len).sum::<usize>() * config.epochs;
    let mut processed = 0usize;
    let mut grad = vec![0.0; dim];
    for _ in 0..config.epochs {
        for stream in &encoded {
            for (i, &center) in stream.iter().enumerate() {
                let lr = config.learning_rate * (1.0 - processed as f64 / (total_words as f64 + 1.0)).max(1e-4);
                processed += 1;
                let lo = i.saturating_sub(config.window);
                let hi = (i + config.window + 1).min(stream.len());
                for (j, &context) in stream.iter().enumerate().take(hi).skip(lo) {
                    if j == i {
                        continue;
                    }
                    grad.fill(0.0);
                    let row = &input[center * dim..(center + 1) * dim];
                    for k in 0..=config.negatives {
                        let (target, label) = if k == 0 {
                            (context, 1.0)
                        } else {
                            let r = rng.gen::<f64>() * acc;
                            let t = cumulative.partition_point(|&c| c <= r).min(n - 1);
                            if t == context {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let out = &mut output[target * dim..(target + 1) * dim];
                        let dot: f64 = row.iter().zip(out.iter()).map(|(a, b)| a * b).sum();
                        let g = (label - sigmoid(dot)) * lr;
                        for d in 0..dim {
                            grad[d] += g * out[d];
                            out[d] += g * row[d];
                        }
                    }
                    for (v, g) in input[center * dim..(center + 1) * dim].iter_mut().zip(&grad) {
                        *v += g;
                    }
                }
            }
        }
    }
    let symbols = vocab.iter().map(|(s, _)| s.to_string()).collect();
    EmbeddingTable::new(dim, seed, symbols, input)
}
