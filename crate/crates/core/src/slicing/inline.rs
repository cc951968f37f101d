//! Splicing callee slices into their callers with local-id renumbering.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{CandidateStatement, Origin};
use crate::ir::{clean_statement, rename_locals, tokenize_line, Callee, FuncRef, IrTokenKind, LinkedModule, StmtRef};

/// Constant-expression opcodes that may appear as call arguments.
const CONST_EXPR_OPS: &[&str] = &["getelementptr", "bitcast", "inttoptr", "ptrtoint", "addrspacecast"];

/// Value text of each argument in a rendered call statement:
/// `call void @f(i8* align 16 %4, i32 7)` gives `["%4", "7"]`.
pub fn call_argument_values(text: &str) -> Vec<String> {
    let Ok(tokens) = tokenize_line(text) else { return Vec::new() };
    let Some(open) = tokens
        .windows(2)
        .position(|w| matches!(w[0].kind, IrTokenKind::Global | IrTokenKind::Local) && w[1].is("("))
        .map(|i| i + 1)
    else {
        return Vec::new();
    };
    let mut args = Vec::new();
    let mut depth = 0i32;
    let mut start = open + 1;
    for i in open + 1..tokens.len() {
        let t = &tokens[i];
        if t.kind != IrTokenKind::Punct {
            continue;
        }
        match t.text.as_str() {
            "(" | "[" | "{" | "<" => depth += 1,
            ")" | "]" | "}" | ">" if depth > 0 => depth -= 1,
            "," | ")" if depth == 0 => {
                if i > start {
                    let arg = &tokens[start..i];
                    let value_from = arg
                        .iter()
                        .position(|t| t.kind == IrTokenKind::Word && CONST_EXPR_OPS.contains(&t.text.as_str()))
                        .unwrap_or(arg.len() - 1);
                    args.push(text[arg[value_from].span.start..arg[arg.len() - 1].span.end].to_string());
                }
                if t.text == ")" {
                    break;
                }
                start = i + 1;
            }
            _ => {}
        }
    }
    args
}

/// Hands out the smallest numeric ids not yet used in the root function.
struct IdAllocator {
    used: BTreeSet<u64>,
    cursor: u64,
}

impl IdAllocator {
    fn fresh(&mut self) -> u64 {
        while self.used.contains(&self.cursor) {
            self.cursor += 1;
        }
        self.used.insert(self.cursor);
        self.cursor
    }
}

pub(super) struct Assembly {
    pub statements: Vec<CandidateStatement>,
    /// Original statement behind each emitted statement.
    pub refs: Vec<StmtRef>,
    pub functions: Vec<String>,
}

struct Emitter<'a> {
    linked: &'a LinkedModule,
    by_func: &'a BTreeMap<FuncRef, BTreeSet<usize>>,
    ids: IdAllocator,
    out: Assembly,
}

impl Emitter<'_> {
    fn involved_callee(&self, s: StmtRef) -> Option<FuncRef> {
        match self.linked.callee_of(s)? {
            Callee::Defined(g) if self.by_func.contains_key(&g) => Some(g),
            _ => None,
        }
    }

    /// Emits the sliced statements of `f`. `frame` maps the function's
    /// local names into the root namespace; `None` keeps names (the root).
    fn emit(&mut self, f: FuncRef, mut frame: Option<HashMap<String, String>>, path: &mut Vec<FuncRef>) {
        let func = self.linked.function(f);
        if !self.out.functions.contains(&func.name) {
            self.out.functions.push(func.name.clone());
        }
        let Some(indices) = self.by_func.get(&f) else { return };
        for &i in indices {
            let s = f.stmt(i);
            let st = &func.statements[i];
            let cleaned = clean_statement(&st.raw);
            let text = match frame.as_mut() {
                None => cleaned,
                Some(map) => {
                    let ids = &mut self.ids;
                    rename_locals(&cleaned, |n| Some(map.entry(n.to_string()).or_insert_with(|| format!("%{}", ids.fresh())).clone()))
                }
            };
            let origin = Origin::Statement { module: self.linked.module_of(f).file.clone(), function: func.name.clone(), index: i };
            self.out.statements.push(CandidateStatement { text: text.clone(), debug: st.debug.clone(), origin });
            self.out.refs.push(s);
            if let Some(g) = self.involved_callee(s) {
                if !path.contains(&g) {
                    let callee = self.linked.function(g);
                    let mut map: HashMap<String, String> =
                        callee.params.iter().zip(call_argument_values(&text)).map(|(p, a)| (p.name.clone(), a)).collect();
                    for p in &callee.params {
                        if !map.contains_key(&p.name) {
                            map.insert(p.name.clone(), format!("%{}", self.ids.fresh()));
                        }
                    }
                    path.push(g);
                    self.emit(g, Some(map), path);
                    path.pop();
                }
            }
        }
    }
}

/// Orders the sliced statements into one candidate.
///
/// Functions whose statements are sliced but that are called from another
/// sliced function get their call sites added as context. Each root
/// (a sliced function no other sliced function calls) is emitted in
/// statement order; after every call to a sliced function the callee's
/// statements follow, renumbered into fresh ids of the root's namespace and
/// with parameters replaced by the actual arguments. A callee already on
/// the current inlining path is not inlined again.
pub(super) fn assemble(linked: &LinkedModule, slice: &BTreeSet<StmtRef>) -> Assembly {
    let mut by_func: BTreeMap<FuncRef, BTreeSet<usize>> = BTreeMap::new();
    for s in slice {
        by_func.entry(s.func()).or_default().insert(s.index as usize);
    }
    // call sites of involved callees inside involved callers
    let involved: Vec<FuncRef> = by_func.keys().copied().collect();
    let mut calls: BTreeMap<FuncRef, BTreeSet<FuncRef>> = BTreeMap::new();
    let mut context = BTreeSet::new();
    for &f in &involved {
        for (i, st) in linked.function(f).statements.iter().enumerate() {
            if st.callee().is_none() {
                continue;
            }
            if let Some(Callee::Defined(g)) = linked.callee_of(f.stmt(i)) {
                if g != f && by_func.contains_key(&g) {
                    context.insert(f.stmt(i));
                    calls.entry(f).or_default().insert(g);
                }
            }
        }
    }
    if !context.is_empty() {
        let mut extra: BTreeSet<StmtRef> = context.into_iter().filter(|s| !slice.contains(s)).collect();
        super::slice::complete_definitions(linked, &mut extra);
        for s in extra {
            by_func.entry(s.func()).or_default().insert(s.index as usize);
        }
    }
    let called: BTreeSet<FuncRef> = calls.values().flatten().copied().collect();
    let mut roots: Vec<FuncRef> = involved.iter().copied().filter(|f| !called.contains(f)).collect();
    // mutually recursive clusters without an outside caller: start at the
    // first uncovered function
    loop {
        let mut covered: BTreeSet<FuncRef> = BTreeSet::new();
        let mut stack = roots.clone();
        while let Some(f) = stack.pop() {
            if covered.insert(f) {
                stack.extend(calls.get(&f).into_iter().flatten().copied());
            }
        }
        match involved.iter().find(|f| !covered.contains(f)) {
            Some(&f) => roots.push(f),
            None => break,
        }
    }
    let mut emitter = Emitter {
        linked,
        by_func: &by_func,
        ids: IdAllocator { used: BTreeSet::new(), cursor: 0 },
        out: Assembly { statements: Vec::new(), refs: Vec::new(), functions: Vec::new() },
    };
    for root in roots {
        emitter.ids = IdAllocator { used: linked.function(root).numeric_ids(), cursor: 0 };
        emitter.emit(root, None, &mut vec![root]);
    }
    emitter.out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argument_values() {
        assert_eq!(call_argument_values("call void @llvm.memset.p0i8.i64(i8* align 16 %4, i8 65, i64 %9, i1 false)"), ["%4", "65", "%9", "false"]);
        assert_eq!(
            call_argument_values("%2 = call i32 (i8*, ...) @printf(i8* noundef getelementptr inbounds ([4 x i8], [4 x i8]* @.str, i64 0, i64 0), i8* noundef %1)"),
            ["getelementptr inbounds ([4 x i8], [4 x i8]* @.str, i64 0, i64 0)", "%1"]
        );
        assert!(call_argument_values("call void @printLine()").is_empty());
    }
}
