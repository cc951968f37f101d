//! Lexical tokens of candidate statements and function-name symbolization.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

use crate::frontend::ApiList;
use crate::ir::{tokenize_line, IrTokenKind};
use crate::slicing::SemanticCandidate;

/// The tokens of a candidate and, per statement, the range of its tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    /// One `[start, end)` range per statement, in statement order; together
    /// they partition `0..tokens.len()`.
    pub spans: Vec<Range<usize>>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Splits one rendered statement. Locals (`%17`), keywords, types and
/// literals stay whole; a global splits into `@` and its name so that
/// `@FUN1` and `@memset` share the sigil token. A statement that does not
/// lex falls back to whitespace splitting.
pub fn tokenize_statement(text: &str) -> Vec<String> {
    let Ok(tokens) = tokenize_line(text) else {
        log::warn!("statement does not lex, splitting on whitespace: {text}");
        return text.split_whitespace().map(str::to_string).collect();
    };
    let mut out = Vec::with_capacity(tokens.len() + 2);
    for t in tokens {
        if t.kind == IrTokenKind::Global {
            out.push("@".to_string());
            out.push(t.text[1..].to_string());
        } else {
            out.push(t.text);
        }
    }
    out
}

pub fn tokenize_ir(candidate: &SemanticCandidate) -> TokenSequence {
    tokenize_texts(candidate.statements.iter().map(|s| s.text.as_str()))
}

pub fn tokenize_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> TokenSequence {
    let mut seq = TokenSequence::default();
    for text in texts {
        let start = seq.tokens.len();
        seq.tokens.extend(tokenize_statement(text));
        seq.spans.push(start..seq.tokens.len());
    }
    seq
}

/// Joins tokens back into statement text: single spaces, except that the
/// `@` sigil is glued to the name after it. Tokenizing the result gives the
/// tokens back.
pub fn detokenize(tokens: &[String]) -> String {
    let mut out = String::new();
    let mut glue = true;
    for t in tokens {
        if !glue {
            out.push(' ');
        }
        out.push_str(t);
        glue = t == "@";
    }
    out
}

/// User function → `FUNk`, numbered in order of first appearance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NameMap {
    pub names: Vec<(String, String)>,
}

impl NameMap {
    pub fn symbol(&self, name: &str) -> Option<&str> {
        self.names.iter().find(|(n, _)| n == name).map(|(_, s)| s.as_str())
    }
}

/// Replaces every global name for which `is_user` holds with `FUNk`.
/// Local ids are left alone: they are already independent of the source
/// variable names.
pub fn symbolize(seq: &TokenSequence, is_user: impl Fn(&str) -> bool) -> (TokenSequence, NameMap) {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    let mut names = NameMap::default();
    let mut tokens = seq.tokens.clone();
    for (i, pair) in seq.tokens.windows(2).enumerate().map(|(i, w)| (i + 1, w)) {
        if pair[0] != "@" || !is_user(&pair[1]) {
            continue;
        }
        let next = map.len() + 1;
        let sym = map.entry(seq.tokens[i].clone()).or_insert_with(|| {
            let s = format!("FUN{next}");
            names.names.push((seq.tokens[i].clone(), s.clone()));
            s
        });
        tokens[i] = sym.clone();
    }
    (TokenSequence { tokens, spans: seq.spans.clone() }, names)
}

/// The user-defined functions a candidate mentions: the functions its
/// statements come from plus every called function that is neither on the
/// API list nor an LLVM intrinsic.
pub fn user_functions(candidate: &SemanticCandidate, seq: &TokenSequence, api: &ApiList) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = candidate.functions.iter().cloned().collect();
    for w in seq.tokens.windows(3) {
        if w[0] == "@" && w[2] == "(" && !w[1].starts_with("llvm.") && !api.contains(&w[1]) {
            out.insert(w[1].clone());
        }
    }
    out.retain(|f| !api.contains(f));
    out
}

/// Tokenizes and symbolizes a candidate.
pub fn candidate_tokens(candidate: &SemanticCandidate, api: &ApiList) -> (TokenSequence, NameMap) {
    let seq = tokenize_ir(candidate);
    let user = user_functions(candidate, &seq, api);
    symbolize(&seq, |n| user.contains(n))
}
