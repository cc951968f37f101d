//! Control-flow graphs, post-dominators and control dependence.

use std::collections::{BTreeSet, HashMap};
use std::ops::Range;

use super::DependenceError;
use crate::ir::{InstKind, IrFunction};

/// How control reaches a successor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BranchKind {
    Jump,
    True,
    False,
    /// Target of a `switch` (default or case).
    Case,
    /// Edge into the exit node from a `ret`/`unreachable`.
    Exit,
    /// Edge into the exit node added for blocks that cannot otherwise reach it.
    Virtual,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicBlock {
    pub label: String,
    /// Statement index range, label statement included.
    pub stmts: Range<usize>,
    pub reachable: bool,
}

/// A control-flow graph. Node `blocks.len()` is the virtual exit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cfg {
    pub blocks: Vec<BasicBlock>,
    pub edges: Vec<(usize, usize, BranchKind)>,
    pub entry: usize,
}

impl Cfg {
    pub fn exit(&self) -> usize {
        self.blocks.len()
    }

    pub fn node_count(&self) -> usize {
        self.blocks.len() + 1
    }

    /// A CFG over abstract blocks; `returns` lists blocks with an edge to the
    /// exit. Used by tests and oracles. Unreachable blocks are pruned and
    /// blocks that cannot reach the exit get a virtual exit edge.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], returns: &[usize]) -> Cfg {
        let blocks = (0..n).map(|i| BasicBlock { label: i.to_string(), stmts: 0..0, reachable: true }).collect();
        let mut all: Vec<(usize, usize, BranchKind)> = edges.iter().map(|&(a, b)| (a, b, BranchKind::Jump)).collect();
        all.extend(returns.iter().map(|&r| (r, n, BranchKind::Exit)));
        let mut cfg = Cfg { blocks, edges: all, entry: 0 };
        cfg.normalize();
        cfg
    }

    pub fn successors(&self, b: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.0 == b).map(|e| e.1)
    }

    pub fn predecessors(&self, b: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.1 == b).map(|e| e.0)
    }

    /// Marks reachability from the entry, drops edges touching unreachable
    /// blocks, and adds virtual exit edges so every block reaches the exit.
    fn normalize(&mut self) {
        let n = self.node_count();
        let mut reach = vec![false; n];
        if !self.blocks.is_empty() {
            let mut stack = vec![self.entry];
            while let Some(b) = stack.pop() {
                if std::mem::replace(&mut reach[b], true) {
                    continue;
                }
                stack.extend(self.successors(b).filter(|&s| !reach[s]).collect::<Vec<_>>());
            }
        }
        for (i, b) in self.blocks.iter_mut().enumerate() {
            b.reachable = reach[i];
        }
        self.edges.retain(|e| reach[e.0]);
        self.edges.sort();
        self.edges.dedup();
        // blocks stuck in infinite loops: connect the last such block to exit
        loop {
            let exit = self.exit();
            let mut to_exit = vec![false; n];
            let mut stack = vec![exit];
            while let Some(b) = stack.pop() {
                if std::mem::replace(&mut to_exit[b], true) {
                    continue;
                }
                stack.extend(self.predecessors(b).filter(|&p| !to_exit[p]).collect::<Vec<_>>());
            }
            match (0..self.blocks.len()).rev().find(|&b| self.blocks[b].reachable && !to_exit[b]) {
                Some(stuck) => {
                    self.edges.push((stuck, exit, BranchKind::Virtual));
                    self.edges.sort();
                }
                None => break,
            }
        }
    }

    /// Block containing statement `index`.
    pub fn block_of(&self, index: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.stmts.contains(&index))
    }
}

/// Splits a function into basic blocks at labels and terminators and
/// connects them by `br`/`switch`/`ret` semantics.
pub fn build_cfg(f: &IrFunction) -> Result<Cfg, DependenceError> {
    let structural = |message: String| DependenceError::Structure { function: f.name.clone(), message };
    let mut blocks: Vec<BasicBlock> = Vec::new();
    let mut start = 0;
    let mut label = f.entry_label.clone();
    let mut open = false;
    for (i, s) in f.statements.iter().enumerate() {
        if s.is_label() {
            if open {
                return Err(structural(format!("block %{label} falls through to label %{} without a terminator", s.result.as_deref().unwrap_or(""))));
            }
            start = i;
            label = s.result.clone().unwrap_or_default();
            open = true;
            continue;
        }
        open = true;
        if s.kind.is_terminator() {
            blocks.push(BasicBlock { label: label.clone(), stmts: start..i + 1, reachable: true });
            open = false;
            start = i + 1;
            label = String::new();
        }
    }
    if open {
        return Err(structural(format!("block %{label} does not end with a terminator")));
    }
    let by_label: HashMap<&str, usize> = blocks.iter().enumerate().map(|(i, b)| (b.label.as_str(), i)).collect();
    let exit = blocks.len();
    let mut edges = Vec::new();
    for (bi, b) in blocks.iter().enumerate() {
        let term = &f.statements[b.stmts.end - 1];
        let target = |l: &String| by_label.get(l.as_str()).copied().ok_or_else(|| structural(format!("branch to unknown label %{l}")));
        match &term.kind {
            InstKind::Br { cond, targets } => {
                if cond.is_some() && targets.len() == 2 {
                    edges.push((bi, target(&targets[0])?, BranchKind::True));
                    edges.push((bi, target(&targets[1])?, BranchKind::False));
                } else {
                    for t in targets {
                        edges.push((bi, target(t)?, BranchKind::Jump));
                    }
                }
            }
            InstKind::Switch { targets, .. } => {
                for t in targets {
                    edges.push((bi, target(t)?, BranchKind::Case));
                }
            }
            _ => edges.push((bi, exit, BranchKind::Exit)),
        }
    }
    let mut cfg = Cfg { blocks, edges, entry: 0 };
    cfg.normalize();
    Ok(cfg)
}

/// Immediate post-dominators: `result[b]` for every node (exit included);
/// `None` for the exit itself and for unreachable blocks.
///
/// Iterative algorithm of Cooper, Harvey and Kennedy on the reverse CFG.
pub fn post_dominators(cfg: &Cfg) -> Vec<Option<usize>> {
    let n = cfg.node_count();
    let exit = cfg.exit();
    let mut succs: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b, _) in &cfg.edges {
        succs[a].push(b);
        preds[b].push(a);
    }
    // postorder of the reverse graph from exit
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let mut stack: Vec<(usize, usize)> = vec![(exit, 0)];
    seen[exit] = true;
    while let Some(&mut (node, ref mut next)) = stack.last_mut() {
        if let Some(&p) = preds[node].get(*next) {
            *next += 1;
            if !seen[p] {
                seen[p] = true;
                stack.push((p, 0));
            }
        } else {
            order.push(node);
            stack.pop();
        }
    }
    let mut rank = vec![usize::MAX; n];
    for (i, &b) in order.iter().enumerate() {
        rank[b] = i;
    }
    let mut ipdom: Vec<Option<usize>> = vec![None; n];
    ipdom[exit] = Some(exit);
    let intersect = |ipdom: &[Option<usize>], mut a: usize, mut b: usize| {
        while a != b {
            while rank[a] < rank[b] {
                a = ipdom[a].unwrap();
            }
            while rank[b] < rank[a] {
                b = ipdom[b].unwrap();
            }
        }
        a
    };
    let mut changed = true;
    while changed {
        changed = false;
        for &b in order.iter().rev() {
            if b == exit {
                continue;
            }
            let mut new: Option<usize> = None;
            for &s in &succs[b] {
                if ipdom[s].is_none() {
                    continue;
                }
                new = Some(match new {
                    None => s,
                    Some(cur) => intersect(&ipdom, s, cur),
                });
            }
            if new.is_some() && ipdom[b] != new {
                ipdom[b] = new;
                changed = true;
            }
        }
    }
    ipdom[exit] = None;
    ipdom
}

/// Block-level control dependences `(a, b)`: `b` is control dependent on
/// `a`. For every edge `a → s` the post-dominator tree is walked from `s`
/// up to (excluding) `ipdom(a)`.
pub fn control_dependences(cfg: &Cfg, ipdom: &[Option<usize>]) -> BTreeSet<(usize, usize)> {
    let exit = cfg.exit();
    let mut out = BTreeSet::new();
    for &(a, s, _) in &cfg.edges {
        if a == exit || !cfg.blocks[a].reachable {
            continue;
        }
        let stop = ipdom[a];
        let mut runner = Some(s);
        while let Some(r) = runner {
            if Some(r) == stop || r == exit {
                break;
            }
            out.insert((a, r));
            runner = ipdom[r];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_ll;

    fn function(body: &str) -> IrFunction {
        let text = format!("define void @f(i1 %0) {{\n{body}}}\n");
        parse_ll(&text, "f.ll").unwrap().functions.remove(0)
    }

    #[test]
    fn straight_line_is_one_block() {
        let cfg = build_cfg(&function("  %2 = alloca i32\n  ret void\n")).unwrap();
        assert_eq!(cfg.blocks.len(), 1);
        assert_eq!(cfg.edges, [(0, 1, BranchKind::Exit)]);
        assert_eq!(post_dominators(&cfg), [Some(1), None]);
    }

    #[test]
    fn diamond() {
        let body = "  br i1 %0, label %2, label %3\n2:\n  br label %4\n3:\n  br label %4\n4:\n  ret void\n";
        let cfg = build_cfg(&function(body)).unwrap();
        assert_eq!(cfg.blocks.len(), 4);
        let ipdom = post_dominators(&cfg);
        assert_eq!(ipdom[1], Some(3));
        assert_eq!(ipdom[2], Some(3));
        assert_eq!(ipdom[0], Some(3));
        let cd = control_dependences(&cfg, &ipdom);
        assert_eq!(cd.into_iter().collect::<Vec<_>>(), [(0, 1), (0, 2)]);
    }

    #[test]
    fn loop_with_conditional_break_has_back_edge() {
        let body = "  br label %2\n2:\n  br i1 %0, label %3, label %4\n3:\n  br i1 %0, label %4, label %2\n4:\n  ret void\n";
        let cfg = build_cfg(&function(body)).unwrap();
        assert!(cfg.edges.iter().any(|&(a, b, _)| a == 2 && b == 1), "{:?}", cfg.edges);
    }

    #[test]
    fn missing_terminator_is_a_structural_error() {
        let f = function("  %2 = alloca i32\n3:\n  ret void\n");
        assert!(matches!(build_cfg(&f), Err(DependenceError::Structure { .. })));
    }

    #[test]
    fn unreachable_blocks_are_pruned_and_infinite_loops_reach_exit() {
        let cfg = Cfg::from_edges(4, &[(0, 1), (1, 1), (3, 0)], &[]);
        assert!(!cfg.blocks[3].reachable);
        assert!(cfg.edges.contains(&(1, 4, BranchKind::Virtual)));
        let ipdom = post_dominators(&cfg);
        assert_eq!(ipdom[0], Some(1));
        assert_eq!(ipdom[3], None);
    }
}
