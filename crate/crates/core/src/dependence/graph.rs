//! Statement-level dependence graph across a linked module.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rayon::prelude::*;

use super::cfg::{build_cfg, control_dependences, post_dominators};
use super::effects::{external_effect, Effect};
use super::DependenceError;
use crate::ir::{Callee, FuncRef, InstKind, IrFunction, LinkedModule, StmtRef, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    /// SSA def→use, store→load through a shared base, or ret→call result.
    Data,
    /// Branch → statement whose execution it decides.
    Control,
    /// Call site → callee entry-region statement.
    Call,
    /// Actual argument → users of the formal parameter.
    Param,
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeKind::Data => "data",
            EdgeKind::Control => "control",
            EdgeKind::Call => "call",
            EdgeKind::Param => "param",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub from: StmtRef,
    pub to: StmtRef,
    pub kind: EdgeKind,
}

/// Nodes are the statements of every defined function except block labels
/// and debug intrinsics. Immutable once built.
#[derive(Debug, Clone, Default)]
pub struct DependenceGraph {
    nodes: Vec<StmtRef>,
    index: HashMap<StmtRef, usize>,
    edges: Vec<Edge>,
    out: Vec<Vec<(usize, EdgeKind)>>,
    inc: Vec<Vec<(usize, EdgeKind)>>,
}

impl DependenceGraph {
    /// Builds a graph from explicit nodes and edges. Edges are sorted and
    /// deduplicated; self-loops are dropped.
    pub fn new(mut nodes: Vec<StmtRef>, mut edges: Vec<Edge>) -> Self {
        nodes.sort();
        nodes.dedup();
        let index: HashMap<StmtRef, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        edges.retain(|e| e.from != e.to && index.contains_key(&e.from) && index.contains_key(&e.to));
        edges.sort();
        edges.dedup();
        let mut out = vec![Vec::new(); nodes.len()];
        let mut inc = vec![Vec::new(); nodes.len()];
        for e in &edges {
            let (a, b) = (index[&e.from], index[&e.to]);
            out[a].push((b, e.kind));
            inc[b].push((a, e.kind));
        }
        DependenceGraph { nodes, index, edges, out, inc }
    }

    /// An abstract graph over nodes `0..n` (statements `0.0.i`), all edges
    /// of kind data. Used for testing slicing in isolation.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let node = |i: usize| StmtRef::new(0, 0, i);
        let nodes = (0..n).map(node).collect();
        let edges = edges.iter().map(|&(a, b)| Edge { from: node(a), to: node(b), kind: EdgeKind::Data }).collect();
        Self::new(nodes, edges)
    }

    pub fn nodes(&self) -> &[StmtRef] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Dense index of a statement, if it is a node.
    pub fn node_index(&self, s: StmtRef) -> Option<usize> {
        self.index.get(&s).copied()
    }

    pub fn node(&self, i: usize) -> StmtRef {
        self.nodes[i]
    }

    /// Nodes that depend on node `i`.
    pub fn successors(&self, i: usize) -> &[(usize, EdgeKind)] {
        &self.out[i]
    }

    /// Nodes that node `i` depends on.
    pub fn predecessors(&self, i: usize) -> &[(usize, EdgeKind)] {
        &self.inc[i]
    }

    pub fn has_edge(&self, from: StmtRef, to: StmtRef, kind: EdgeKind) -> bool {
        self.edges.binary_search(&Edge { from, to, kind }).is_ok()
    }
}

/// Renders the edges as `from<TAB>to<TAB>kind` lines, statements written
/// as `<module-file>:<function>#<index>`.
pub fn write_edges(graph: &DependenceGraph, linked: &LinkedModule) -> String {
    let name = |s: StmtRef| format!("{}:{}#{}", linked.module_of(s.func()).file, linked.function(s.func()).name, s.index);
    graph.edges().iter().map(|e| format!("{}\t{}\t{}\n", name(e.from), name(e.to), e.kind)).collect()
}

/// Memory a pointer designates, after walking `getelementptr`/cast chains.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Base {
    Local(FuncRef, String),
    Global(String),
}

#[derive(Debug, Default)]
struct FunctionFacts {
    edges: Vec<Edge>,
    writes: Vec<(Base, StmtRef)>,
    reads: Vec<(Base, StmtRef)>,
    /// Defining statement of each local base.
    base_defs: Vec<(Base, StmtRef)>,
    /// Statements not control dependent on any branch.
    entry_region: Vec<StmtRef>,
    /// `ret` statements returning a value.
    returns: Vec<StmtRef>,
    /// Users of each formal parameter.
    param_users: Vec<Vec<StmtRef>>,
    /// In-module calls: call statement, callee and, per argument, the
    /// statement that supplies it.
    calls: Vec<(StmtRef, FuncRef, Vec<StmtRef>)>,
    nodes: Vec<StmtRef>,
}

fn is_node(s: &crate::ir::IrStatement) -> bool {
    !s.is_label() && !s.is_debug_intrinsic()
}

fn global_key(linked: &LinkedModule, module: u32, name: &str) -> String {
    match linked.members[module as usize].global(name) {
        Some(g) if g.internal => format!("{module}:{name}"),
        _ => name.to_string(),
    }
}

fn function_facts(linked: &LinkedModule, fr: FuncRef) -> Result<FunctionFacts, DependenceError> {
    let f: &IrFunction = linked.function(fr);
    let cfg = build_cfg(f)?;
    let ipdom = post_dominators(&cfg);
    let cd = control_dependences(&cfg, &ipdom);
    let mut facts = FunctionFacts { param_users: vec![Vec::new(); f.params.len()], ..Default::default() };

    let defs: HashMap<&str, usize> = f
        .statements
        .iter()
        .enumerate()
        .filter(|(_, s)| is_node(s))
        .filter_map(|(i, s)| Some((s.result.as_deref()?, i)))
        .collect();
    let params: HashMap<&str, usize> = f.params.iter().enumerate().map(|(i, p)| (p.name.as_str(), i)).collect();

    let base_of = |v: &Value| -> Option<Base> {
        let mut v = v.clone();
        for _ in 0..f.statements.len() + 1 {
            match &v {
                Value::Local(n) => {
                    let next = defs.get(n.as_str()).and_then(|&i| match &f.statements[i].kind {
                        InstKind::Gep { base } => Some(base.clone()),
                        InstKind::Cast { src } => Some(src.clone()),
                        _ => None,
                    });
                    match next {
                        Some(nv) => v = nv,
                        None => return Some(Base::Local(fr, n.clone())),
                    }
                }
                other => return other.global().map(|g| Base::Global(global_key(linked, fr.module, g))),
            }
        }
        None
    };

    for (i, s) in f.statements.iter().enumerate() {
        if !is_node(s) {
            continue;
        }
        let me = fr.stmt(i);
        facts.nodes.push(me);
        for u in s.used_locals() {
            if let Some(&d) = defs.get(u) {
                facts.edges.push(Edge { from: fr.stmt(d), to: me, kind: EdgeKind::Data });
            } else if let Some(&p) = params.get(u) {
                facts.param_users[p].push(me);
            }
        }
        if let Some(r) = &s.result {
            if defs.get(r.as_str()) == Some(&i) {
                facts.base_defs.push((Base::Local(fr, r.clone()), me));
            }
        }
        match &s.kind {
            InstKind::Load { ptr } => facts.reads.extend(base_of(ptr).map(|b| (b, me))),
            InstKind::Store { ptr, .. } => facts.writes.extend(base_of(ptr).map(|b| (b, me))),
            InstKind::Call { callee, args } => {
                let (effect, target) = match callee.as_deref().map(|n| linked.resolve(fr.module, n)) {
                    Some(Callee::External(n)) => (external_effect(n), None),
                    Some(Callee::Defined(t)) => (Effect::Unknown, Some(t)),
                    _ => (Effect::Unknown, None),
                };
                for (pos, a) in args.iter().enumerate() {
                    if matches!(a, Value::Const(_)) {
                        continue;
                    }
                    if let Some(b) = base_of(a) {
                        if effect.writes(pos) {
                            facts.writes.push((b.clone(), me));
                        }
                        if effect.reads(pos) {
                            facts.reads.push((b, me));
                        }
                    }
                }
                if let Some(t) = target {
                    let suppliers = args
                        .iter()
                        .map(|a| match a.local().and_then(|n| defs.get(n)) {
                            Some(&d) => fr.stmt(d),
                            None => me,
                        })
                        .collect();
                    facts.calls.push((me, t, suppliers));
                }
            }
            InstKind::Ret { value: Some(_) } => facts.returns.push(me),
            InstKind::Phi { incoming } => {
                for (_, label) in incoming {
                    if let Some(b) = cfg.blocks.iter().position(|b| &b.label == label) {
                        let term = cfg.blocks[b].stmts.end - 1;
                        facts.edges.push(Edge { from: fr.stmt(term), to: me, kind: EdgeKind::Control });
                    }
                }
            }
            _ => {}
        }
    }

    let mut dependent_blocks = BTreeSet::new();
    for &(a, b) in &cd {
        dependent_blocks.insert(b);
        let term = fr.stmt(cfg.blocks[a].stmts.end - 1);
        for i in cfg.blocks[b].stmts.clone() {
            if is_node(&f.statements[i]) {
                facts.edges.push(Edge { from: term, to: fr.stmt(i), kind: EdgeKind::Control });
            }
        }
    }
    for (bi, b) in cfg.blocks.iter().enumerate() {
        if b.reachable && !dependent_blocks.contains(&bi) {
            facts.entry_region.extend(b.stmts.clone().filter(|&i| is_node(&f.statements[i])).map(|i| fr.stmt(i)));
        }
    }
    Ok(facts)
}

/// Builds the dependence graph of a linked module.
///
/// * data: SSA def→use (phi incoming values included); writer→reader for
///   every pair of statements whose pointers trace to the same base; and
///   writer→definition of a local base, so a statement that uses a buffer
///   address also depends on what was written into the buffer.
/// * control: standard post-dominance control dependence, plus
///   predecessor terminator → phi.
/// * call: call site → callee statements outside any branch.
/// * param: argument supplier → users of the formal parameter.
/// * data: callee `ret` → call statement.
///
/// Per-function facts are computed in parallel; assembly is sequential and
/// deterministic.
pub fn build_dependence_graph(linked: &LinkedModule) -> Result<DependenceGraph, DependenceError> {
    let funcs: Vec<FuncRef> = linked.defined_functions().collect();
    let facts: Vec<FunctionFacts> = funcs.par_iter().map(|&f| function_facts(linked, f)).collect::<Result<_, _>>()?;
    let by_func: HashMap<FuncRef, &FunctionFacts> = funcs.iter().copied().zip(facts.iter()).collect();

    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut writes: BTreeMap<&Base, Vec<StmtRef>> = BTreeMap::new();
    let mut reads: BTreeMap<&Base, Vec<StmtRef>> = BTreeMap::new();
    let mut base_defs: HashMap<&Base, StmtRef> = HashMap::new();
    for fx in &facts {
        nodes.extend_from_slice(&fx.nodes);
        edges.extend_from_slice(&fx.edges);
        for (b, s) in &fx.writes {
            writes.entry(b).or_default().push(*s);
        }
        for (b, s) in &fx.reads {
            reads.entry(b).or_default().push(*s);
        }
        base_defs.extend(fx.base_defs.iter().map(|(b, s)| (b, *s)));
    }
    for (base, ws) in &writes {
        let rs = reads.get(base).map(Vec::as_slice).unwrap_or(&[]);
        for &w in ws {
            edges.extend(rs.iter().map(|&r| Edge { from: w, to: r, kind: EdgeKind::Data }));
            if let Some(&d) = base_defs.get(base) {
                edges.push(Edge { from: w, to: d, kind: EdgeKind::Data });
            }
        }
    }
    for fx in &facts {
        for (call, callee, suppliers) in &fx.calls {
            let Some(target) = by_func.get(callee) else { continue };
            edges.extend(target.entry_region.iter().map(|&s| Edge { from: *call, to: s, kind: EdgeKind::Call }));
            edges.extend(target.returns.iter().map(|&r| Edge { from: r, to: *call, kind: EdgeKind::Data }));
            for (supplier, users) in suppliers.iter().zip(&target.param_users) {
                edges.extend(users.iter().map(|&u| Edge { from: *supplier, to: u, kind: EdgeKind::Param }));
            }
        }
    }
    Ok(DependenceGraph::new(nodes, edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_ll;

    fn graph(text: &str) -> (LinkedModule, DependenceGraph) {
        let linked = LinkedModule::link(vec![parse_ll(text, "t.ll").unwrap()]).unwrap();
        let g = build_dependence_graph(&linked).unwrap();
        (linked, g)
    }

    #[test]
    fn store_to_load_and_def_use() {
        let (l, g) = graph("define void @f(i32 %0) {\n  %2 = alloca i32\n  store i32 %0, i32* %2\n  %3 = load i32, i32* %2\n  ret void\n}\n");
        let f = l.functions["f"];
        let want = [
            Edge { from: f.stmt(0), to: f.stmt(1), kind: EdgeKind::Data },
            Edge { from: f.stmt(0), to: f.stmt(2), kind: EdgeKind::Data },
            Edge { from: f.stmt(1), to: f.stmt(0), kind: EdgeKind::Data },
            Edge { from: f.stmt(1), to: f.stmt(2), kind: EdgeKind::Data },
        ];
        assert_eq!(g.edges(), want);
    }

    #[test]
    fn branch_guards_statements() {
        let text = "define void @f(i1 %0) {\n  br i1 %0, label %2, label %4\n2:\n  %3 = add i32 1, 2\n  br label %4\n4:\n  ret void\n}\n";
        let (l, g) = graph(text);
        let f = l.functions["f"];
        assert!(g.has_edge(f.stmt(0), f.stmt(2), EdgeKind::Control));
        assert!(g.has_edge(f.stmt(0), f.stmt(3), EdgeKind::Control));
        assert!(!g.edges().iter().any(|e| e.to == f.stmt(5) && e.kind == EdgeKind::Control));
        assert!(g.node_index(f.stmt(1)).is_none(), "labels are not nodes");
    }

    #[test]
    fn interprocedural_edges() {
        let text = "define i32 @g(i32 %0) {\n  %2 = add i32 %0, 1\n  ret i32 %2\n}\n\
                    define void @f() {\n  %1 = add i32 2, 3\n  %2 = call i32 @g(i32 %1)\n  ret void\n}\n";
        let (l, g) = graph(text);
        let (gf, ff) = (l.functions["g"], l.functions["f"]);
        assert!(g.has_edge(ff.stmt(1), gf.stmt(0), EdgeKind::Call));
        assert!(g.has_edge(ff.stmt(0), gf.stmt(0), EdgeKind::Param));
        assert!(g.has_edge(gf.stmt(1), ff.stmt(1), EdgeKind::Data));
    }

    #[test]
    fn independent_functions_have_no_cross_edges() {
        let text = "define void @a() {\n  %1 = alloca i32\n  ret void\n}\ndefine void @b() {\n  %1 = alloca i32\n  ret void\n}\n";
        let (_, g) = graph(text);
        assert!(g.edges().iter().all(|e| e.from.function == e.to.function));
    }

    #[test]
    fn phi_gets_control_edge_from_predecessor_branch() {
        let text = "define i32 @f(i1 %0) {\n  br i1 %0, label %2, label %3\n2:\n  br label %3\n3:\n  %4 = phi i32 [ 1, %1 ], [ 2, %2 ]\n  ret i32 %4\n}\n";
        let (l, g) = graph(text);
        let f = l.functions["f"];
        assert!(g.has_edge(f.stmt(0), f.stmt(4), EdgeKind::Control));
        assert!(g.has_edge(f.stmt(2), f.stmt(4), EdgeKind::Control));
    }

    #[test]
    fn dump_format() {
        let (l, g) = graph("define void @f() {\n  %1 = alloca i32\n  store i32 1, i32* %1\n  ret void\n}\n");
        assert_eq!(write_edges(&g, &l), "t.ll:f#0\tt.ll:f#1\tdata\nt.ll:f#1\tt.ll:f#0\tdata\n");
    }
}
