//! Bidirectional closure over the dependence graph.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::dependence::DependenceGraph;
use crate::ir::{FuncRef, LinkedModule, StmtRef};

/// Union of the backward closure (what the anchor depends on) and the
/// forward closure (what depends on the anchor), anchor included, ordered
/// by (function, statement index). Anchor statements that are not graph
/// nodes are ignored.
pub fn slice(graph: &DependenceGraph, anchor: &BTreeSet<StmtRef>) -> BTreeSet<StmtRef> {
    let starts: Vec<usize> = anchor.iter().filter_map(|&s| graph.node_index(s)).collect();
    let mut out = BTreeSet::new();
    for forward in [false, true] {
        let mut seen = vec![false; graph.node_count()];
        let mut queue: VecDeque<usize> = starts.iter().copied().collect();
        for &s in &starts {
            seen[s] = true;
        }
        while let Some(n) = queue.pop_front() {
            out.insert(graph.node(n));
            let next = if forward { graph.successors(n) } else { graph.predecessors(n) };
            for &(m, _) in next {
                if !std::mem::replace(&mut seen[m], true) {
                    queue.push_back(m);
                }
            }
        }
    }
    out
}

/// Adds, transitively, the definition of every local value used by a
/// statement in the set, so rendered candidates never use an undefined id.
/// Forward slices can otherwise reach a statement whose other operands lie
/// outside the slice.
pub fn complete_definitions(linked: &LinkedModule, set: &mut BTreeSet<StmtRef>) {
    let mut defs: HashMap<FuncRef, HashMap<&str, usize>> = HashMap::new();
    let mut work: Vec<StmtRef> = set.iter().copied().collect();
    while let Some(s) = work.pop() {
        let table = defs.entry(s.func()).or_insert_with(|| {
            linked
                .function(s.func())
                .statements
                .iter()
                .enumerate()
                .filter(|(_, st)| !st.is_label())
                .filter_map(|(i, st)| Some((st.result.as_deref()?, i)))
                .collect()
        });
        for u in linked.statement(s).used_locals() {
            if let Some(&d) = table.get(u) {
                let r = s.func().stmt(d);
                if set.insert(r) {
                    work.push(r);
                }
            }
        }
    }
}
