//! Line-level detection and the detection report.
//!
//! Report layout (tab-separated):
//!
//! ```text
//! # irloc report v1 threshold=0.5 kappa=1
//! id  program  score  vulnerable  line_scores  detected  covered
//! c4  prog     0.97   1           1=0.01,2=0.97  prog/a.c:19  prog/a.c:2,prog/a.c:19
//! ```
//!
//! `line_scores` lists `statement=score` for every statement with tokens in
//! the input window, `detected` the source lines of statements scoring above
//! the threshold, and `covered` the source lines of all the candidate's
//! statements. Empty lists are written as `-`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;

use super::{kmax_average, kmax_selection, Model, NeuralError};
use crate::encoding::{EncodedSample, LineSpan};
use crate::evaluation::{format_lines, SourceLine};
use crate::FileId;

pub const REPORT_HEADER: &str = "# irloc report v1";

#[derive(Debug, Clone, PartialEq)]
pub struct LineScore {
    /// 1-based statement index.
    pub statement: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionEntry {
    pub id: String,
    pub program: String,
    /// κ-max average over all activations (all-ones mask).
    pub score: f64,
    pub vulnerable: bool,
    pub lines: Vec<LineScore>,
    /// Source lines of the statements scoring above the threshold.
    pub detected_lines: BTreeSet<SourceLine>,
    pub covered: BTreeSet<SourceLine>,
}

impl DetectionEntry {
    /// Statements scoring above `threshold`.
    pub fn detected_statements(&self, threshold: f64) -> Vec<usize> {
        self.lines.iter().filter(|l| l.score > threshold).map(|l| l.statement).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub threshold: f64,
    pub kappa: usize,
    pub entries: Vec<DetectionEntry>,
}

/// Score of each line: the mean of its κ largest activations, or of all its
/// activations when it has fewer than κ tokens.
pub fn line_scores(acts: &[f64], lines: &[LineSpan], kappa: usize) -> Vec<LineScore> {
    lines
        .iter()
        .map(|l| {
            let a = &acts[l.range()];
            let k = kappa.min(a.len());
            let score = kmax_selection(a, k).iter().map(|&i| a[i]).sum::<f64>() / k as f64;
            LineScore { statement: l.statement, score }
        })
        .collect()
}

pub fn detect_sample(model: &Model, sample: &EncodedSample, threshold: f64, kappa: usize) -> Result<DetectionEntry, NeuralError> {
    if sample.dim != model.input_dim() {
        return Err(NeuralError::Shape(format!("{}: {}-dimensional inputs, model expects {}", sample.id, sample.dim, model.input_dim())));
    }
    let acts = model.activations(&sample.inputs)?;
    let score = kmax_average(&acts, kappa)?;
    let lines = line_scores(&acts, &sample.lines, kappa);
    let mut detected_lines = BTreeSet::new();
    let mut vulnerable = false;
    for l in lines.iter().filter(|l| l.score > threshold) {
        vulnerable = true;
        match sample.location(l.statement) {
            Some(d) => {
                detected_lines.insert((d.file.clone(), d.line));
            }
            None => log::debug!("{}: detected statement {} has no source location", sample.id, l.statement),
        }
    }
    Ok(DetectionEntry {
        id: sample.id.clone(),
        program: sample.program.clone(),
        score,
        vulnerable,
        lines,
        detected_lines,
        covered: sample.covered_lines(),
    })
}

/// Detects every sample in parallel; entries keep the sample order.
pub fn detect(model: &Model, samples: &[EncodedSample], threshold: f64, kappa: usize) -> Result<DetectionReport, NeuralError> {
    let entries = samples.par_iter().map(|s| detect_sample(model, s, threshold, kappa)).collect::<Result<_, _>>()?;
    Ok(DetectionReport { threshold, kappa, entries })
}

fn or_dash(s: &str) -> &str {
    if s.is_empty() {
        "-"
    } else {
        s
    }
}

pub fn write_report(report: &DetectionReport) -> String {
    let mut out = format!("{REPORT_HEADER} threshold={} kappa={}\n", report.threshold, report.kappa);
    out.push_str("id\tprogram\tscore\tvulnerable\tline_scores\tdetected\tcovered\n");
    for e in &report.entries {
        let scores = e.lines.iter().map(|l| format!("{}={}", l.statement, l.score)).collect::<Vec<_>>().join(",");
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            e.id,
            or_dash(&e.program),
            e.score,
            e.vulnerable as u8,
            or_dash(&scores),
            format_lines(&e.detected_lines),
            format_lines(&e.covered)
        );
    }
    out
}

fn parse_lines(s: &str) -> Result<BTreeSet<SourceLine>, String> {
    if s == "-" {
        return Ok(BTreeSet::new());
    }
    s.split(',')
        .map(|l| {
            let (f, n) = l.rsplit_once(':').ok_or_else(|| format!("bad source line `{l}`"))?;
            Ok((FileId::new(f), n.parse().map_err(|_| format!("bad source line `{l}`"))?))
        })
        .collect()
}

pub fn read_report(text: &str) -> Result<DetectionReport, NeuralError> {
    let bad = |line: usize, m: String| NeuralError::Format(format!("report line {line}: {m}"));
    let mut lines = text.lines().enumerate();
    let header = lines.next().and_then(|(_, h)| h.strip_prefix(REPORT_HEADER)).ok_or_else(|| bad(1, "missing header".into()))?;
    let (mut threshold, mut kappa) = (None, None);
    for f in header.split_whitespace() {
        match f.split_once('=') {
            Some(("threshold", v)) => threshold = v.parse().ok(),
            Some(("kappa", v)) => kappa = v.parse().ok(),
            _ => return Err(bad(1, format!("unknown header field `{f}`"))),
        }
    }
    let (threshold, kappa) = threshold.zip(kappa).ok_or_else(|| bad(1, "missing threshold or kappa".into()))?;
    lines.next();
    let mut entries = Vec::new();
    for (no, line) in lines {
        let f: Vec<&str> = line.split('\t').collect();
        let [id, program, score, vulnerable, scores, detected, covered] = f.as_slice() else {
            return Err(bad(no + 1, "expected 7 tab-separated fields".into()));
        };
        let parse_score = |s: &str| s.parse::<f64>().map_err(|_| bad(no + 1, format!("bad score `{s}`")));
        let mut ls = Vec::new();
        if *scores != "-" {
            for item in scores.split(',') {
                let (i, v) = item.split_once('=').ok_or_else(|| bad(no + 1, format!("bad line score `{item}`")))?;
                ls.push(LineScore { statement: i.parse().map_err(|_| bad(no + 1, format!("bad statement `{i}`")))?, score: parse_score(v)? });
            }
        }
        entries.push(DetectionEntry {
            id: id.to_string(),
            program: if *program == "-" { String::new() } else { program.to_string() },
            score: parse_score(score)?,
            vulnerable: match *vulnerable {
                "1" => true,
                "0" => false,
                v => return Err(bad(no + 1, format!("bad prediction `{v}`"))),
            },
            lines: ls,
            detected_lines: parse_lines(detected).map_err(|m| bad(no + 1, m))?,
            covered: parse_lines(covered).map_err(|m| bad(no + 1, m))?,
        });
    }
    Ok(DetectionReport { threshold, kappa, entries })
}
