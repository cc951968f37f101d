//! From semantic candidates to fixed-size model inputs: tokenize, replace
//! user function names with `FUNk`, embed with skip-gram vectors, truncate
//! around the candidate's anchor and pad.
//!
//! ```
//! use irloc::encoding::{tokenize_statement, window};
//!
//! assert_eq!(tokenize_statement("call void @FUN1()"), ["call", "void", "@", "FUN1", "(", ")"]);
//! // 2000 tokens, anchor token 1500, 900-token input: centered window
//! assert_eq!(window(2000, 1500, 900), 1050..1950);
//! // anchors near the start keep the first 900 tokens
//! assert_eq!(window(2000, 10, 900), 0..900);
//! ```

mod dataset;
mod embedding;
mod sample;
mod tokens;

use rayon::prelude::*;

pub use dataset::{read_dataset, write_dataset, DATASET_MAGIC};
pub use embedding::{train_embedding, EmbeddingConfig, EmbeddingTable, EMBEDDING_HEADER};
pub use sample::{build_mask, vectorize, window, EncodedSample, LineSpan, MaskError};
pub use tokens::{candidate_tokens, detokenize, symbolize, tokenize_ir, tokenize_statement, tokenize_texts, user_functions, NameMap, TokenSequence};

use crate::corpus::LabeledCandidate;
use crate::frontend::ApiList;
use crate::ir::program_of;

#[derive(Debug, thiserror::Error)]
pub enum EncodingError {
    #[error("cannot train an embedding on an empty corpus")]
    EmptyCorpus,
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Config(String),
}

/// The symbolized token stream of every record, in record order.
pub fn token_streams(records: &[LabeledCandidate], api: &ApiList) -> Vec<TokenSequence> {
    records.par_iter().map(|r| candidate_tokens(&r.candidate, api).0).collect()
}

/// Encodes every record with `table`, in record order.
pub fn encode_records(records: &[LabeledCandidate], table: &EmbeddingTable, max_tokens: usize, api: &ApiList) -> Vec<EncodedSample> {
    records
        .par_iter()
        .map(|r| {
            let c = &r.candidate;
            let (seq, _) = candidate_tokens(c, api);
            let (inputs, w, lines) = vectorize(&seq, c.anchor, table, max_tokens);
            EncodedSample {
                id: c.id.clone(),
                program: program_of(c.file.as_str()),
                label: r.label.clone(),
                max_tokens,
                dim: table.dim(),
                inputs,
                tokens: w.len(),
                window_start: w.start,
                lines,
                locations: c.statements.iter().map(|s| s.debug.clone()).collect(),
            }
        })
        .collect()
}
