//! Detection metrics and the locating metric IoU.
//!
//! ```
//! use std::collections::BTreeSet;
//! use irloc::evaluation::{detection_metrics, f1_score, iou, ConfusionCounts};
//!
//! let u: BTreeSet<u32> = [1, 2, 3, 4].into();
//! let v: BTreeSet<u32> = [3, 4, 5].into();
//! assert_eq!(iou(&u, &v), 0.4);
//!
//! let m = detection_metrics(&ConfusionCounts { tp: 1, fp: 0, tn: 1, fn_: 0 });
//! assert_eq!((m.fpr, m.f1), (Some(0.0), Some(1.0)));
//! assert!((f1_score(0.981, 0.040).unwrap() - 0.970).abs() < 1e-3);
//! ```
//!
//! A metric whose denominator is zero is `None` ("undefined"), never 0.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::FileId;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("candidate {0} has a detection result but no ground truth")]
    MissingTruth(String),
    #[error("candidate {0} has ground truth but no detection result")]
    MissingResult(String),
    #[error("candidate {0} appears twice")]
    Duplicate(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn record(&mut self, actual: bool, predicted: bool) {
        match (actual, predicted) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// FPR, FNR, accuracy, precision and F1; `None` marks an undefined value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// F1 from precision and false-negative rate: 2·P·(1−FNR)/(P+(1−FNR)).
pub fn f1_score(precision: f64, fnr: f64) -> Option<f64> {
    let recall = 1.0 - fnr;
    let den = precision + recall;
    (den > 0.0).then(|| 2.0 * precision * recall / den)
}

pub fn detection_metrics(c: &ConfusionCounts) -> Metrics {
    let fnr = ratio(c.fn_, c.tp + c.fn_);
    let precision = ratio(c.tp, c.tp + c.fp);
    Metrics {
        fpr: ratio(c.fp, c.fp + c.tn),
        fnr,
        accuracy: ratio(c.tp + c.tn, c.total()),
        precision,
        f1: precision.zip(fnr).and_then(|(p, f)| f1_score(p, f)),
    }
}

/// |U∩V| / |U∪V|; two empty sets agree perfectly and score 1.
pub fn iou<T: Ord>(u: &BTreeSet<T>, v: &BTreeSet<T>) -> f64 {
    let inter = u.intersection(v).count();
    let union = u.len() + v.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

pub type SourceLine = (FileId, u32);

/// What the detector said about one candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub id: String,
    pub vulnerable: bool,
    /// V: detected vulnerable source lines.
    pub detected: BTreeSet<SourceLine>,
}

/// What is known about one candidate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Truth {
    pub id: String,
    pub program: String,
    pub vulnerable: bool,
    /// U: truly vulnerable source lines the candidate covers.
    pub lines: BTreeSet<SourceLine>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleResult {
    pub id: String,
    pub actual: bool,
    pub predicted: bool,
    /// IoU of U and V; only defined for candidates detected as vulnerable.
    pub iou: Option<f64>,
    pub detected: BTreeSet<SourceLine>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
    /// Mean IoU over every candidate detected as vulnerable, false
    /// positives included.
    pub mean_iou: Option<f64>,
    /// Mean |V| over the same candidates.
    pub mean_detected: Option<f64>,
    /// Counts with programs as the unit: a program is vulnerable when any of
    /// its candidates is, and detected when any of its candidates is.
    pub program_counts: ConfusionCounts,
    pub samples: Vec<SampleResult>,
}

/// Aligns predictions with truths by candidate id and aggregates.
pub fn aggregate_report(predictions: &[Prediction], truths: &[Truth]) -> Result<Summary, EvalError> {
    let mut by_id: BTreeMap<&str, &Truth> = BTreeMap::new();
    for t in truths {
        if by_id.insert(&t.id, t).is_some() {
            return Err(EvalError::Duplicate(t.id.clone()));
        }
    }
    let mut seen = BTreeSet::new();
    let mut counts = ConfusionCounts::default();
    let mut programs: BTreeMap<&str, (bool, bool)> = BTreeMap::new();
    let mut samples = Vec::with_capacity(predictions.len());
    for p in predictions {
        let t = by_id.get(p.id.as_str()).ok_or_else(|| EvalError::MissingTruth(p.id.clone()))?;
        if !seen.insert(p.id.as_str()) {
            return Err(EvalError::Duplicate(p.id.clone()));
        }
        counts.record(t.vulnerable, p.vulnerable);
        let prog = programs.entry(&t.program).or_default();
        prog.0 |= t.vulnerable;
        prog.1 |= p.vulnerable;
        samples.push(SampleResult {
            id: p.id.clone(),
            actual: t.vulnerable,
            predicted: p.vulnerable,
            iou: p.vulnerable.then(|| iou(&t.lines, &p.detected)),
            detected: p.detected.clone(),
        });
    }
    if let Some(t) = truths.iter().find(|t| !seen.contains(t.id.as_str())) {
        return Err(EvalError::MissingResult(t.id.clone()));
    }
    let mut program_counts = ConfusionCounts::default();
    for &(actual, predicted) in programs.values() {
        program_counts.record(actual, predicted);
    }
    let detected: Vec<&SampleResult> = samples.iter().filter(|s| s.predicted).collect();
    let mean = |f: &dyn Fn(&SampleResult) -> f64| {
        (!detected.is_empty()).then(|| detected.iter().map(|s| f(s)).sum::<f64>() / detected.len() as f64)
    };
    Ok(Summary {
        counts,
        metrics: detection_metrics(&counts),
        mean_iou: mean(&|s| s.iou.unwrap_or(0.0)),
        mean_detected: mean(&|s| s.detected.len() as f64),
        program_counts,
        samples,
    })
}

fn show(m: Option<f64>) -> String {
    m.map(|v| format!("{v:.6}")).unwrap_or_else(|| "undefined".into())
}

pub fn format_lines(lines: &BTreeSet<SourceLine>) -> String {
    if lines.is_empty() {
        return "-".into();
    }
    lines.iter().map(|(f, l)| format!("{f}:{l}")).collect::<Vec<_>>().join(",")
}

/// Tab-separated summary followed by one row per candidate.
pub fn write_summary(s: &Summary) -> String {
    let mut out = String::from("# irloc summary v1\n");
    let c = &s.counts;
    let m = &s.metrics;
    let p = &s.program_counts;
    for (k, v) in [
        ("samples", c.total().to_string()),
        ("TP", c.tp.to_string()),
        ("FP", c.fp.to_string()),
        ("TN", c.tn.to_string()),
        ("FN", c.fn_.to_string()),
        ("FPR", show(m.fpr)),
        ("FNR", show(m.fnr)),
        ("A", show(m.accuracy)),
        ("P", show(m.precision)),
        ("F1", show(m.f1)),
        ("IoU", show(s.mean_iou)),
        ("|V|", show(s.mean_detected)),
        ("program_TP", p.tp.to_string()),
        ("program_FP", p.fp.to_string()),
        ("program_TN", p.tn.to_string()),
        ("program_FN", p.fn_.to_string()),
    ] {
        let _ = writeln!(out, "{k}\t{v}");
    }
    out.push_str("\nid\tlabel\tprediction\tiou\tdetected\n");
    for r in &s.samples {
        let iou = r.iou.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", r.id, r.actual as u8, r.predicted as u8, iou, format_lines(&r.detected));
    }
    out
}
