//! Ground truth per program and labeling of semantic candidates.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{parse_diff, CorpusError};
use crate::ir::program_of;
use crate::slicing::SemanticCandidate;
use crate::FileId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruthSource {
    /// Lines deleted or moved by fix diffs.
    Diff,
    /// Lines listed in a `truth.txt` file.
    Annotation,
}

/// Known vulnerable lines of one program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub program: String,
    pub lines: BTreeSet<(FileId, u32)>,
    pub source: TruthSource,
    /// Every diff of the program only adds lines: the program is known to
    /// be vulnerable but no line can be labeled, so it is left out.
    pub addition_only: bool,
}

impl GroundTruth {
    pub fn is_vulnerable(&self) -> bool {
        !self.lines.is_empty() || self.addition_only
    }

    pub fn contains(&self, file: &FileId, line: u32) -> bool {
        self.lines.iter().any(|(f, l)| *l == line && f.matches(file))
    }
}

/// Parses a `truth.txt` file: one `<file>:<line>` per line; blank lines
/// and `#` comments are ignored.
pub fn parse_truth(text: &str) -> Result<BTreeSet<(FileId, u32)>, CorpusError> {
    let mut out = BTreeSet::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || CorpusError::Format { record: None, line: no + 1, message: format!("expected <file>:<line>, got `{line}`") };
        let (file, n) = line.rsplit_once(':').ok_or_else(bad)?;
        let n: u32 = n.parse().map_err(|_| bad())?;
        if n == 0 || file.is_empty() {
            return Err(bad());
        }
        out.insert((FileId::new(file), n));
    }
    Ok(out)
}

/// Ground truth for every program below `root`: each program directory
/// holds a `truth.txt` or one or more `*.diff` files (both may coexist;
/// their lines are merged).
pub fn load_truth(root: &Path) -> Result<BTreeMap<String, GroundTruth>, CorpusError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CorpusError::Io { path, source }
    };
    let mut out = BTreeMap::new();
    for entry in walkdir::WalkDir::new(root).min_depth(1).sort_by_file_name() {
        let entry = entry.map_err(|e| CorpusError::Io { path: root.to_path_buf(), source: std::io::Error::other(e.to_string()) })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path();
        let rel = path.strip_prefix(root).unwrap_or(path);
        let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        let program = program_of(&rel);
        let name = path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default();
        let is_diff = path.extension().is_some_and(|e| e == "diff" || e == "patch");
        if name != "truth.txt" && !is_diff {
            continue;
        }
        let text = std::fs::read_to_string(path).map_err(io(path))?;
        let in_file = |e: CorpusError| match e {
            CorpusError::Format { line, message, .. } => CorpusError::Format { record: Some(rel.clone()), line, message },
            other => other,
        };
        let truth = out.entry(program.clone()).or_insert_with(|| GroundTruth {
            program,
            lines: BTreeSet::new(),
            source: if is_diff { TruthSource::Diff } else { TruthSource::Annotation },
            addition_only: false,
        });
        if is_diff {
            let d = parse_diff(&text).map_err(in_file)?;
            truth.addition_only |= d.is_addition_only();
            truth.lines.extend(d.removed);
        } else {
            truth.lines.extend(parse_truth(&text).map_err(in_file)?);
        }
    }
    // a program with deletions somewhere is labelable after all
    for t in out.values_mut() {
        if !t.lines.is_empty() {
            t.addition_only = false;
        }
    }
    Ok(out)
}

/// How many statements a vulnerable source line labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LineMapping {
    /// Every statement generated from the line.
    #[default]
    All,
    /// Only the first statement generated from the line.
    First,
}

/// 1-based indices of the candidate statements generated from vulnerable
/// lines; empty (label 0) when the program has no known vulnerable line.
pub fn label_candidate(candidate: &SemanticCandidate, truth: Option<&GroundTruth>, mapping: LineMapping) -> Vec<usize> {
    let Some(truth) = truth.filter(|t| !t.lines.is_empty()) else { return Vec::new() };
    let mut seen = BTreeSet::new();
    let mut label = Vec::new();
    for (i, s) in candidate.statements.iter().enumerate() {
        let Some(d) = &s.debug else { continue };
        if !truth.contains(&d.file, d.line) {
            continue;
        }
        if mapping == LineMapping::First && !seen.insert((d.file.clone(), d.line)) {
            continue;
        }
        label.push(i + 1);
    }
    if label.is_empty() && truth.contains(&candidate.file, candidate.line) {
        log::warn!("{}: vulnerable line {}:{} produced no statement in this slice", candidate.id, candidate.file, candidate.line);
    }
    label
}

/// The truth entry for a candidate's program.
pub fn truth_for<'a>(candidate: &SemanticCandidate, truth: &'a BTreeMap<String, GroundTruth>) -> Option<&'a GroundTruth> {
    truth.get(&program_of(candidate.file.as_str()))
}
