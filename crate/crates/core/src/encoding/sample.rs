//! Fixed-length model inputs and location masks.

use std::collections::BTreeSet;
use std::ops::Range;

use super::{EmbeddingTable, TokenSequence};
use crate::ir::DebugLoc;

/// The token range of one candidate statement inside the input window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineSpan {
    /// 1-based statement index in the candidate.
    pub statement: usize,
    /// Window-relative `[start, end)`.
    pub start: usize,
    pub end: usize,
}

impl LineSpan {
    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }
}

/// One candidate as a `max_tokens × dim` matrix plus its line spans.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSample {
    pub id: String,
    pub program: String,
    /// `None` when the candidate is unlabeled, empty for label `0`,
    /// otherwise 1-based vulnerable statement indices.
    pub label: Option<Vec<usize>>,
    pub max_tokens: usize,
    pub dim: usize,
    /// Row-major `max_tokens × dim` inputs; rows past `tokens` are zero.
    pub inputs: Vec<f64>,
    /// Real (unpadded) tokens in the window.
    pub tokens: usize,
    /// First candidate token in the window.
    pub window_start: usize,
    /// Statements that have at least one token in the window.
    pub lines: Vec<LineSpan>,
    /// Source location of every candidate statement, window or not.
    pub locations: Vec<Option<DebugLoc>>,
}

impl EncodedSample {
    pub fn is_vulnerable(&self) -> bool {
        self.label.as_ref().is_some_and(|l| !l.is_empty())
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.inputs[t * self.dim..(t + 1) * self.dim]
    }

    pub fn location(&self, statement: usize) -> Option<&DebugLoc> {
        self.locations.get(statement.checked_sub(1)?)?.as_ref()
    }

    /// Source lines of every statement of the candidate.
    pub fn covered_lines(&self) -> BTreeSet<(crate::FileId, u32)> {
        self.locations.iter().flatten().map(|d| (d.file.clone(), d.line)).collect()
    }

    /// Source lines of the labeled statements (U).
    pub fn labeled_lines(&self) -> BTreeSet<(crate::FileId, u32)> {
        self.label.iter().flatten().filter_map(|&i| self.location(i)).map(|d| (d.file.clone(), d.line)).collect()
    }
}

/// The `[start, start+max_tokens)` window over `len` tokens, centered on
/// `anchor` and shifted to stay within the sequence.
pub fn window(len: usize, anchor: usize, max_tokens: usize) -> Range<usize> {
    if len <= max_tokens {
        return 0..len;
    }
    let start = anchor.saturating_sub(max_tokens / 2).min(len - max_tokens);
    start..start + max_tokens
}

/// Embeds `seq`, truncating around the first token of statement `anchor`
/// (0-based) and zero-padding to `max_tokens` rows.
pub fn vectorize(seq: &TokenSequence, anchor: usize, table: &EmbeddingTable, max_tokens: usize) -> (Vec<f64>, Range<usize>, Vec<LineSpan>) {
    let dim = table.dim();
    let anchor_token = seq.spans.iter().skip(anchor).find(|s| !s.is_empty()).map(|s| s.start).unwrap_or(0);
    let w = window(seq.len(), anchor_token, max_tokens);
    let mut inputs = vec![0.0; max_tokens * dim];
    for (row, t) in seq.tokens[w.clone()].iter().enumerate() {
        table.embed_into(t, &mut inputs[row * dim..(row + 1) * dim]);
    }
    let lines = seq
        .spans
        .iter()
        .enumerate()
        .filter_map(|(i, s)| {
            let (a, b) = (s.start.max(w.start), s.end.min(w.end));
            (a < b).then(|| LineSpan { statement: i + 1, start: a - w.start, end: b - w.start })
        })
        .collect();
    (inputs, w, lines)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MaskError {
    #[error("{0}: unlabeled sample has no mask")]
    Unlabeled(String),
    #[error("{id}: every labeled line ({lines:?}) lies outside the input window")]
    OutsideWindow { id: String, lines: Vec<usize> },
}

/// Diagonal of the location matrix. Label 0: ones over the real tokens.
/// Vulnerable: ones exactly on the tokens of labeled statements. Padding is
/// always zero. A vulnerable sample whose labeled statements all fall
/// outside the window has no usable mask.
pub fn build_mask(sample: &EncodedSample) -> Result<Vec<f64>, MaskError> {
    let label = sample.label.as_ref().ok_or_else(|| MaskError::Unlabeled(sample.id.clone()))?;
    let mut mask = vec![0.0; sample.max_tokens];
    if label.is_empty() {
        mask[..sample.tokens].fill(1.0);
        return Ok(mask);
    }
    let mut outside = Vec::new();
    for &l in label {
        match sample.lines.iter().find(|s| s.statement == l) {
            Some(s) => mask[s.range()].fill(1.0),
            None => outside.push(l),
        }
    }
    if outside.len() == label.len() {
        return Err(MaskError::OutsideWindow { id: sample.id.clone(), lines: outside });
    }
    if !outside.is_empty() {
        log::warn!("{}: labeled statements {outside:?} lie outside the input window", sample.id);
    }
    Ok(mask)
}
