//! Ground truth, labels and the corpus file.
//!
//! A candidate is labeled with the indices of its statements generated
//! from known vulnerable source lines, or `0` when it has none.
//!
//! ```
//! use irloc::corpus::parse_diff;
//!
//! let diff = "--- a/f.c\n+++ b/f.c\n@@ -10,3 +10,2 @@\n keep\n-char buf[8];\n keep\n";
//! let lines = parse_diff(diff).unwrap();
//! assert_eq!(lines.removed.iter().map(|(_, l)| *l).collect::<Vec<_>>(), [11]);
//! ```

mod diff;
mod format;
mod truth;

pub use diff::{parse_diff, DiffLines};
pub use format::{read_corpus, write_corpus, LabeledCandidate, CORPUS_HEADER};
pub use truth::{label_candidate, load_truth, parse_truth, truth_for, GroundTruth, LineMapping, TruthSource};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{}line {line}: {message}", record.as_ref().map(|r| format!("{r}: ")).unwrap_or_default())]
    Format { record: Option<String>, line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
}
