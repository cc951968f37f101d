use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use super::FrontendError;
use crate::FileId;

/// The four vulnerability syntax characteristics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CandidateKind {
    /// Library/API function call.
    FC,
    /// Array definition.
    AD,
    /// Pointer definition.
    PD,
    /// Arithmetic (assignment) expression.
    AE,
}

impl CandidateKind {
    pub const ALL: [CandidateKind; 4] = [CandidateKind::FC, CandidateKind::AD, CandidateKind::PD, CandidateKind::AE];

    pub fn as_str(self) -> &'static str {
        match self {
            CandidateKind::FC => "FC",
            CandidateKind::AD => "AD",
            CandidateKind::PD => "PD",
            CandidateKind::AE => "AE",
        }
    }
}

impl fmt::Display for CandidateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CandidateKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CandidateKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| format!("unknown candidate kind `{s}`"))
    }
}

/// A syntax-based candidate: consecutive source tokens matching one of the
/// four characteristics, anchored at its first token.
///
/// * FC: the whole call, from the callee name to the closing parenthesis,
///   so the callee and its variable arguments are covered;
/// * AD/PD: the declared identifier;
/// * AE: the whole assignment expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxCandidate {
    pub kind: CandidateKind,
    pub file: FileId,
    pub line: u32,
    pub column: u32,
    pub tokens: Vec<String>,
    /// Token range in the file's token stream; only known for candidates
    /// fresh from extraction.
    pub span: Option<Range<usize>>,
}

impl SyntaxCandidate {
    /// The identifier the candidate is about: the callee for FC, the
    /// declared variable for AD/PD, the assigned variable for AE.
    pub fn name(&self) -> &str {
        let ident = |t: &&String| t.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
        self.tokens.iter().find(ident).map(String::as_str).unwrap_or("")
    }

    /// Tokens joined by single spaces.
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

/// One candidate per line: `kind<TAB>file<TAB>line<TAB>column<TAB>tokens`,
/// tokens separated by single spaces (tabs inside a token become spaces).
pub fn write_candidates(candidates: &[SyntaxCandidate]) -> String {
    let mut out = String::new();
    for c in candidates {
        let text = c.text().replace(['\t', '\n', '\r'], " ");
        out.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", c.kind, c.file, c.line, c.column, text));
    }
    out
}

pub fn read_candidates(text: &str) -> Result<Vec<SyntaxCandidate>, FrontendError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| FrontendError::Format { line: i + 1, message };
        let fields: Vec<&str> = line.splitn(5, '\t').collect();
        if fields.len() != 5 {
            return Err(bad(format!("expected 5 tab-separated fields, found {}", fields.len())));
        }
        let kind = fields[0].parse().map_err(bad)?;
        let num = |s: &str, what: &str| s.parse::<u32>().ok().filter(|&n| n >= 1).ok_or_else(|| bad(format!("bad {what} `{s}`")));
        let file = FileId::new(fields[1]);
        let tokens = super::tokenize_c(fields[4], &file)
            .map_err(|e| bad(e.to_string()))?
            .into_iter()
            .map(|t| t.text)
            .collect();
        out.push(SyntaxCandidate { kind, line: num(fields[2], "line")?, column: num(fields[3], "column")?, file, tokens, span: None });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let c = SyntaxCandidate {
            kind: CandidateKind::FC,
            file: FileId::new("src/a.c"),
            line: 25,
            column: 5,
            tokens: ["memmove", "(", "data", ",", "\"a b\"", ")"].map(String::from).to_vec(),
            span: None,
        };
        let text = write_candidates(std::slice::from_ref(&c));
        assert_eq!(text, "FC\tsrc/a.c\t25\t5\tmemmove ( data , \"a b\" )\n");
        assert_eq!(read_candidates(&text).unwrap(), vec![c.clone()]);
        assert_eq!(c.name(), "memmove");
    }

    #[test]
    fn malformed_rows_are_rejected() {
        assert!(matches!(read_candidates("FC\ta.c\t1\n"), Err(FrontendError::Format { line: 1, .. })));
        assert!(read_candidates("XX\ta.c\t1\t1\tx\n").is_err());
        assert!(read_candidates("AD\ta.c\t0\t1\tx\n").is_err());
    }
}
