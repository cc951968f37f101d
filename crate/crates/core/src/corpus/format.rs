//! The corpus file: semantic candidates, optionally labeled.
//!
//! ```text
//! # irloc corpus v1
//! ### c1 PD example.c:2 anchor=17 globals=2 functions=main,printLine label=17,26
//! 1<TAB>example.c:2<TAB>@data = dso_local global i8* null, align 8<TAB>example.ll:@data
//! 2<TAB>-<TAB>%1 = alloca i32, align 4<TAB>example.ll:main#0
//! <blank line>
//! ```
//!
//! `anchor` is the 1-based index of the first anchor statement, `globals`
//! the number of leading global definitions. `label` is absent before
//! labeling, `0` for non-vulnerable candidates, otherwise the vulnerable
//! statement indices. The second statement column is the source location
//! or `-` when the statement has no debug information; the fourth is the
//! IR statement it came from.

use std::fmt::Write as _;

use super::CorpusError;
use crate::frontend::CandidateKind;
use crate::ir::DebugLoc;
use crate::slicing::{CandidateStatement, SemanticCandidate};
use crate::FileId;

pub const CORPUS_HEADER: &str = "# irloc corpus v1";

/// A semantic candidate with its label: `None` before labeling, empty for
/// label `0`, otherwise 1-based statement indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledCandidate {
    pub candidate: SemanticCandidate,
    pub label: Option<Vec<usize>>,
}

impl LabeledCandidate {
    pub fn is_vulnerable(&self) -> bool {
        self.label.as_ref().is_some_and(|l| !l.is_empty())
    }
}

fn clean(text: &str) -> String {
    text.replace(['\t', '\n', '\r'], " ")
}

pub fn write_corpus(records: &[LabeledCandidate]) -> String {
    let mut out = String::from(CORPUS_HEADER);
    out.push('\n');
    for r in records {
        let c = &r.candidate;
        let _ = write!(
            out,
            "### {} {} {}:{} anchor={} globals={} functions={}",
            c.id,
            c.kind,
            c.file,
            c.line,
            c.anchor + 1,
            c.globals,
            c.functions.join(",")
        );
        match &r.label {
            None => {}
            Some(l) if l.is_empty() => out.push_str(" label=0"),
            Some(l) => {
                let _ = write!(out, " label={}", l.iter().map(usize::to_string).collect::<Vec<_>>().join(","));
            }
        }
        out.push('\n');
        for (i, s) in c.statements.iter().enumerate() {
            let loc = s.debug.as_ref().map(DebugLoc::to_string).unwrap_or_else(|| "-".into());
            let _ = writeln!(out, "{}\t{}\t{}\t{}", i + 1, loc, clean(&s.text), s.origin);
        }
        out.push('\n');
    }
    out
}

fn parse_loc(s: &str) -> Option<(FileId, u32)> {
    let (file, line) = s.rsplit_once(':')?;
    let line = line.parse().ok().filter(|&l| l > 0)?;
    (!file.is_empty()).then(|| (FileId::new(file), line))
}

fn parse_header(line: &str) -> Result<(SemanticCandidate, Option<Vec<usize>>, usize), String> {
    let mut fields = line.strip_prefix("### ").ok_or("record header must start with `### `")?.split(' ');
    let id = fields.next().filter(|s| !s.is_empty()).ok_or("missing candidate id")?.to_string();
    let kind = fields.next().ok_or("missing kind")?.parse::<CandidateKind>()?;
    let (file, line_no) = fields.next().and_then(parse_loc).ok_or("missing or bad <file>:<line>")?;
    let mut anchor = None;
    let mut globals = 0;
    let mut functions = Vec::new();
    let mut label = None;
    for f in fields {
        let (k, v) = f.split_once('=').ok_or_else(|| format!("bad header field `{f}`"))?;
        match k {
            "anchor" => anchor = Some(v.parse::<usize>().ok().filter(|&a| a > 0).ok_or("bad anchor")? - 1),
            "globals" => globals = v.parse().map_err(|_| "bad globals count")?,
            "functions" => functions = v.split(',').filter(|s| !s.is_empty()).map(str::to_string).collect(),
            "label" if v == "0" => label = Some(Vec::new()),
            "label" => {
                let l: Vec<usize> = v.split(',').map(|x| x.parse::<usize>().ok().filter(|&i| i > 0)).collect::<Option<_>>().ok_or("bad label")?;
                label = Some(l);
            }
            _ => return Err(format!("unknown header field `{k}`")),
        }
    }
    let anchor = anchor.ok_or("missing anchor")?;
    let c = SemanticCandidate { id, kind, file, line: line_no, anchor, globals, statements: Vec::new(), functions };
    Ok((c, label, globals))
}

fn parse_statement(line: &str, expected: usize) -> Result<CandidateStatement, String> {
    let f: Vec<&str> = line.split('\t').collect();
    let [idx, loc, text, origin] = f.as_slice() else { return Err("statement line needs 4 tab-separated fields".into()) };
    if idx.parse::<usize>().ok() != Some(expected) {
        return Err(format!("expected statement number {expected}"));
    }
    let debug = match *loc {
        "-" => None,
        l => Some(parse_loc(l).map(|(file, line)| DebugLoc { file, line }).ok_or("bad source location")?),
    };
    Ok(CandidateStatement { text: text.to_string(), debug, origin: origin.parse()? })
}

pub fn read_corpus(text: &str) -> Result<Vec<LabeledCandidate>, CorpusError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CORPUS_HEADER => {}
        _ => return Err(CorpusError::Format { record: None, line: 1, message: format!("missing `{CORPUS_HEADER}` header") }),
    }
    let mut out = Vec::new();
    let mut current: Option<LabeledCandidate> = None;
    let finish = |r: LabeledCandidate, line: usize| -> Result<LabeledCandidate, CorpusError> {
        let c = &r.candidate;
        let bad = |m: &str| CorpusError::Format { record: Some(c.id.clone()), line, message: m.to_string() };
        if c.statements.is_empty() {
            return Err(bad("record has no statements"));
        }
        if c.anchor >= c.statements.len() || c.globals > c.statements.len() {
            return Err(bad("anchor or globals out of range"));
        }
        if r.label.as_ref().is_some_and(|l| l.iter().any(|&i| i > c.statements.len())) {
            return Err(bad("label index beyond the record's statements"));
        }
        Ok(r)
    };
    for (no, line) in lines {
        let record = current.as_ref().map(|r| r.candidate.id.clone());
        let bad = |message: String| CorpusError::Format { record: record.clone(), line: no + 1, message };
        if line.is_empty() {
            if let Some(r) = current.take() {
                out.push(finish(r, no + 1)?);
            }
            continue;
        }
        match current.as_mut() {
            None => {
                let (candidate, label, _) = parse_header(line).map_err(bad)?;
                current = Some(LabeledCandidate { candidate, label });
            }
            Some(r) => {
                let n = r.candidate.statements.len() + 1;
                r.candidate.statements.push(parse_statement(line, n).map_err(bad)?);
            }
        }
    }
    if let Some(r) = current.take() {
        let n = text.lines().count();
        out.push(finish(r, n)?);
    }
    Ok(out)
}
