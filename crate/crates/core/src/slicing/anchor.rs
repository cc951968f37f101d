//! Locating a syntax candidate among IR statements.

use std::collections::BTreeSet;

use crate::dependence::base_name;
use crate::frontend::{CandidateKind, SyntaxCandidate};
use crate::ir::{InstKind, LinkedModule, StmtRef};

fn is_node(linked: &LinkedModule, s: StmtRef) -> bool {
    let st = linked.statement(s);
    !st.is_label() && !st.is_debug_intrinsic()
}

/// Statements that carry the candidate's code.
///
/// * FC: calls on the line whose callee is the named function (intrinsic
///   and fortified spellings included).
/// * AD/PD: the storage of the declared variable: the `alloca` described
///   by a debug declaration of that name and line, or, for a global, every
///   statement that uses it; plus any code on the line (initializers).
/// * AE: every statement on the line.
///
/// When the specific rule finds nothing, all statements on the line are
/// used. An empty result means the candidate is not sliceable.
pub fn locate_anchor(c: &SyntaxCandidate, linked: &LinkedModule) -> BTreeSet<StmtRef> {
    let on_line = linked.map_source_line(&c.file, c.line);
    let code_on_line: BTreeSet<StmtRef> = on_line.iter().copied().filter(|&s| is_node(linked, s)).collect();
    let name = c.name();
    let mut anchor = BTreeSet::new();
    match c.kind {
        CandidateKind::FC => {
            anchor.extend(code_on_line.iter().copied().filter(|&s| {
                linked.statement(s).callee().is_some_and(|callee| callee == name || base_name(callee) == name)
            }));
        }
        CandidateKind::AD | CandidateKind::PD => {
            for &s in &on_line {
                let InstKind::DbgIntrinsic { value: Some(v), var_name: Some(var), var_line } = &linked.statement(s).kind else {
                    continue;
                };
                if var != name || var_line.is_some_and(|l| l != c.line) {
                    continue;
                }
                let f = linked.function(s.func());
                if let Some(i) = f.statements.iter().position(|st| st.result.as_deref() == Some(v.as_str()) && !st.is_label()) {
                    anchor.insert(s.func().stmt(i));
                }
            }
            for m in &linked.members {
                for g in &m.globals {
                    let declared_here = g.debug.as_ref().is_some_and(|d| d.line == c.line && d.file.matches(&c.file));
                    let named = g.source_name.as_deref().unwrap_or(&g.name) == name;
                    if declared_here && named && !g.external {
                        anchor.extend(
                            linked.statements().filter(|(r, st)| is_node(linked, *r) && st.used_globals().any(|u| u == g.name)).map(|(r, _)| r),
                        );
                    }
                }
            }
            anchor.extend(code_on_line.iter().copied());
        }
        CandidateKind::AE => anchor.extend(code_on_line.iter().copied()),
    }
    if anchor.is_empty() {
        anchor = code_on_line;
    }
    anchor
}
