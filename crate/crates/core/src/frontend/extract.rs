use std::collections::HashSet;

use super::candidates::{CandidateKind, SyntaxCandidate};
use super::lexer::SourceToken;
use super::parser::{AstNode, NodeKind};
use super::ApiList;

/// Walks the AST and returns every candidate of the four kinds, deduplicated
/// by (kind, anchor) and sorted in document order (kind order breaks ties).
pub fn extract_ssyvcs(root: &AstNode, tokens: &[SourceToken], api: &ApiList) -> Vec<SyntaxCandidate> {
    let mut found: Vec<(usize, CandidateKind, std::ops::Range<usize>)> = Vec::new();
    root.walk(&mut |node| match node.kind {
        NodeKind::CallExpr => {
            let (Some(name), Some(name_tok)) = (&node.name, node.name_token) else { return };
            if api.contains(name) && node.call_arguments().iter().any(mentions_variable) {
                found.push((name_tok, CandidateKind::FC, name_tok..node.span.end));
            }
        }
        NodeKind::VarDeclaration => {
            let Some(name_tok) = node.name_token else { return };
            let end = node.split.unwrap_or(node.span.end);
            let declarator = &tokens[node.span.start..end];
            let has = |s: &str| declarator.iter().any(|t| t.text == s);
            if has("[") && has("]") {
                found.push((name_tok, CandidateKind::AD, name_tok..name_tok + 1));
            }
            if has("*") {
                found.push((name_tok, CandidateKind::PD, name_tok..name_tok + 1));
            }
        }
        NodeKind::AssignmentExpr if node.children.get(1).is_some_and(mentions_variable) => {
            found.push((node.span.start, CandidateKind::AE, node.span.clone()));
        }
        _ => {}
    });
    found.sort_by_key(|(anchor, kind, _)| (*anchor, *kind));
    let mut seen = HashSet::new();
    found
        .into_iter()
        .filter(|(anchor, kind, _)| seen.insert((*anchor, *kind)))
        .map(|(anchor, kind, span)| {
            let first = &tokens[anchor];
            SyntaxCandidate {
                kind,
                file: first.file.clone(),
                line: first.line,
                column: first.column,
                tokens: tokens[span.clone()].iter().filter(|t| !t.directive).map(|t| t.text.clone()).collect(),
                span: Some(span),
            }
        })
        .collect()
}

/// Whether the subtree references a variable. Callee names are not
/// variables: the parser folds a plain-identifier callee into the call node.
fn mentions_variable(node: &AstNode) -> bool {
    node.kind == NodeKind::DeclRefExpr || node.children.iter().any(mentions_variable)
}

#[cfg(test)]
mod tests {
    use super::super::{extract_from_source, ApiList, CandidateKind::*};

    fn extract(src: &str) -> Vec<(super::CandidateKind, u32, String)> {
        extract_from_source(src, "t.c", &ApiList::default())
            .unwrap()
            .into_iter()
            .map(|c| (c.kind, c.line, c.text()))
            .collect()
    }

    #[test]
    fn no_matches_yields_nothing() {
        assert!(extract("int x;").is_empty());
        assert!(extract("").is_empty());
        assert!(extract("void f(void) { int a = 3; g(a); printf(\"hi\"); b = 4; }").is_empty());
    }

    #[test]
    fn array_then_assignment() {
        let expected = [(AD, 1, "buf".into()), (AE, 1, "p = buf".into())];
        assert_eq!(extract("char buf[10]; p = buf;"), expected);
        assert_eq!(extract("char buf[10]; void f() { p = buf; }"), expected);
    }

    #[test]
    fn one_candidate_per_kind_for_pointer_arrays() {
        let got = extract("void f() { char *p[4]; }");
        assert_eq!(got, [(AD, 1, "p".into()), (PD, 1, "p".into())]);
    }

    #[test]
    fn fc_carries_call_tokens_and_needs_a_variable() {
        let got = extract("void f(char *d, char *s) { memcpy(d, s, 10); memset(0, 0, 10); }");
        assert_eq!(got, [(FC, 1, "memcpy ( d , s , 10 )".into())]);
    }

    #[test]
    fn multiplication_in_initializer_is_not_a_pointer() {
        assert!(extract("void f() { int n = a * b; }").is_empty());
    }

    #[test]
    fn callee_alone_is_not_a_variable() {
        assert!(extract("void f() { p = g(); }").is_empty());
        assert_eq!(extract("void f() { p = g(q); }").len(), 1);
    }
}
