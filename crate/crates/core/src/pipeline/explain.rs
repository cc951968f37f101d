//! Provenance trace of one candidate: syntax candidate → slice → window →
//! per-statement scores → detected source lines.

use std::fmt;

use super::{files, Phase, Pipeline, PipelineError, Stage};
use crate::corpus::read_corpus;
use crate::frontend::read_candidates;
use crate::neural::read_report;

#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub id: String,
    /// Summary lines: syntax candidate, slice, window and score.
    pub header: Vec<String>,
    /// One line per candidate statement, in slice order.
    pub statements: Vec<String>,
    /// Detected source lines, `file:line`.
    pub detected: Vec<String>,
}

impl fmt::Display for Explanation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "candidate {}", self.id)?;
        for h in &self.header {
            writeln!(f, "  {h}")?;
        }
        writeln!(f, "statements ({}):", self.statements.len())?;
        for s in &self.statements {
            writeln!(f, "  {s}")?;
        }
        if self.detected.is_empty() {
            writeln!(f, "detected lines: none")
        } else {
            writeln!(f, "detected lines: {}", self.detected.join(", "))
        }
    }
}

fn unknown(id: &str, known: impl Iterator<Item = String>) -> PipelineError {
    let mut scored: Vec<(f64, String)> = known.map(|k| (strsim::normalized_levenshtein(id, &k), k)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    PipelineError::UnknownId { id: id.to_string(), nearest: scored.into_iter().take(3).map(|(_, k)| k).collect() }
}

pub(super) fn explain(p: &Pipeline, id: &str, phase: Phase) -> Result<Explanation, PipelineError> {
    let dir = p.dir(phase);
    let report = read_report(&p.read_text(&dir.join(files::REPORT), Stage::Detect)?)?;
    let Some(entry) = report.entries.iter().find(|e| e.id == id) else {
        return Err(unknown(id, report.entries.iter().map(|e| e.id.clone())));
    };
    let samples = super::ops::load_dataset(&p.read(&p.detect_input(phase), Stage::Encode)?)?;
    let sample = samples.iter().find(|s| s.id == id).ok_or_else(|| PipelineError::Data(format!("{id}: in the report but not in the dataset")))?;
    let corpus_file = if phase == Phase::Test { files::SLICES } else { files::CORPUS };
    let producer = match (phase, p.config.synthetic.is_some()) {
        (Phase::Test, _) => Stage::Slice,
        (_, true) => Stage::Synthesize,
        _ => Stage::Label,
    };
    let records = read_corpus(&p.read_text(&dir.join(corpus_file), producer)?)?;
    let record = records.iter().find(|r| r.candidate.id == id).ok_or_else(|| PipelineError::Data(format!("{id}: not in {corpus_file}")))?;
    let c = &record.candidate;

    let mut header = Vec::new();
    let syntax = id
        .strip_prefix('c')
        .and_then(|n| n.parse::<usize>().ok())
        .filter(|_| p.config.synthetic.is_none())
        .and_then(|row| {
            let text = std::fs::read_to_string(dir.join(files::CANDIDATES)).ok()?;
            read_candidates(&text).ok()?.into_iter().nth(row.checked_sub(1)?)
        });
    match syntax {
        Some(s) => header.push(format!("syntax candidate: {} {}:{}:{} `{}`", s.kind.as_str(), s.file, s.line, s.column, s.text())),
        None => header.push(format!("syntax candidate: {} {}:{}", c.kind.as_str(), c.file, c.line)),
    }
    header.push(format!(
        "slice: {} statements ({} globals) from {}; anchor statement {}",
        c.statements.len(),
        c.globals,
        c.functions.join(", "),
        c.anchor + 1
    ));
    header.push(format!(
        "window: candidate tokens {}..{} ({} of at most {}); {} statements inside",
        sample.window_start,
        sample.window_start + sample.tokens,
        sample.tokens,
        sample.max_tokens,
        sample.lines.len()
    ));
    match &record.label {
        Some(l) if l.is_empty() => header.push("label: not vulnerable".into()),
        Some(l) => header.push(format!("label: vulnerable at statements {}", l.iter().map(usize::to_string).collect::<Vec<_>>().join(","))),
        None => {}
    }
    header.push(format!(
        "score: {:.6} (κ={}, threshold {}) → {}",
        entry.score,
        report.kappa,
        report.threshold,
        if entry.vulnerable { "vulnerable" } else { "not vulnerable" }
    ));

    let statements = c
        .statements
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let score = entry.lines.iter().find(|l| l.statement == k + 1);
            let mark = if score.is_some_and(|l| l.score > report.threshold) { '*' } else { ' ' };
            let score = score.map_or("       -".to_string(), |l| format!("{:.6}", l.score));
            let loc = s.debug.as_ref().map_or("-".to_string(), |d| format!("{}:{}", d.file, d.line));
            format!("{:>4} {mark} {score} {loc:<16} {}", k + 1, s.text)
        })
        .collect();
    let detected = entry.detected_lines.iter().map(|(f, l)| format!("{f}:{l}")).collect();
    Ok(Explanation { id: id.to_string(), header, statements, detected })
}
