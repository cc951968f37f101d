//! Brute-force reference implementations shared by integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use irloc::ir::{tokenize_line, IrTokenKind};
use irloc::slicing::SemanticCandidate;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random CFG over `n` blocks: each block gets 0–2 successors; blocks
/// without successors return.
pub fn random_cfg(rng: &mut ChaCha8Rng, max_blocks: usize) -> (usize, Vec<(usize, usize)>, Vec<usize>) {
    let n = rng.gen_range(1..=max_blocks);
    let mut edges = Vec::new();
    let mut returns = Vec::new();
    for b in 0..n {
        let k = rng.gen_range(0..=2);
        if k == 0 {
            returns.push(b);
        }
        let mut succ = BTreeSet::new();
        for _ in 0..k {
            succ.insert(rng.gen_range(0..n));
        }
        edges.extend(succ.into_iter().map(|s| (b, s)));
    }
    (n, edges, returns)
}

/// All simple paths from `from` to `to`, each as its node list.
pub fn simple_paths(succ: &[Vec<usize>], from: usize, to: usize) -> Vec<Vec<usize>> {
    fn go(succ: &[Vec<usize>], path: &mut Vec<usize>, to: usize, out: &mut Vec<Vec<usize>>) {
        let last = *path.last().unwrap();
        if last == to {
            out.push(path.clone());
            return;
        }
        for &s in &succ[last] {
            if !path.contains(&s) {
                path.push(s);
                go(succ, path, to, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(succ, &mut vec![from], to, &mut out);
    out
}

/// `pdom[a][b]`: every path from `a` to `exit` passes through `b`
/// (reflexive). Requires every node in `live` to reach the exit.
pub fn post_dominance_by_paths(succ: &[Vec<usize>], exit: usize, live: &[bool]) -> Vec<Vec<bool>> {
    let n = succ.len();
    let mut pdom = vec![vec![false; n]; n];
    for a in (0..n).filter(|&a| live[a]) {
        let paths = simple_paths(succ, a, exit);
        assert!(!paths.is_empty(), "node {a} cannot reach exit");
        for b in 0..n {
            pdom[a][b] = paths.iter().all(|p| p.contains(&b));
        }
    }
    pdom
}

/// Control dependence by definition: `b` depends on `a` iff some successor
/// `s` of `a` is post-dominated by `b` while `b` does not strictly
/// post-dominate `a`.
pub fn control_dependence_by_definition(succ: &[Vec<usize>], exit: usize, live: &[bool]) -> BTreeSet<(usize, usize)> {
    let pdom = post_dominance_by_paths(succ, exit, live);
    let mut out = BTreeSet::new();
    for a in (0..succ.len()).filter(|&a| live[a] && a != exit) {
        for b in (0..succ.len()).filter(|&b| live[b] && b != exit) {
            let strictly = a != b && pdom[a][b];
            if !strictly && succ[a].iter().any(|&s| pdom[s][b]) {
                out.insert((a, b));
            }
        }
    }
    out
}

/// Reachability closure by repeated boolean matrix multiplication.
pub fn closure_matrix(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut r = vec![vec![false; n]; n];
    for i in 0..n {
        r[i][i] = true;
    }
    for &(a, b) in edges {
        r[a][b] = true;
    }
    loop {
        let mut next = r.clone();
        for i in 0..n {
            for k in 0..n {
                if r[i][k] {
                    for j in 0..n {
                        next[i][j] |= r[k][j];
                    }
                }
            }
        }
        if next == r {
            return r;
        }
        r = next;
    }
}

/// One step of an edit script over an old file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EditOp {
    Keep,
    Delete,
    Add,
}

/// Random edit script over `old_len` lines. `allow_delete = false` gives
/// addition-only scripts.
pub fn random_edit_script(rng: &mut ChaCha8Rng, old_len: usize, allow_delete: bool) -> Vec<EditOp> {
    let mut ops = Vec::new();
    for _ in 0..old_len {
        while rng.gen_bool(0.08) {
            ops.push(EditOp::Add);
        }
        ops.push(if allow_delete && rng.gen_bool(0.12) { EditOp::Delete } else { EditOp::Keep });
    }
    if !ops.iter().any(|o| *o != EditOp::Keep) {
        let at = rng.gen_range(0..=ops.len());
        ops.insert(at, if allow_delete { EditOp::Delete } else { EditOp::Add });
        if allow_delete && at < ops.len() - 1 {
            // a Delete consumes an old line; drop the Keep it displaced
            ops.remove(at + 1);
        }
    }
    ops
}

/// Old-file line numbers an edit script deletes: the oracle answer.
pub fn deleted_lines(ops: &[EditOp]) -> Vec<u32> {
    let mut old = 0;
    let mut out = Vec::new();
    for op in ops {
        match op {
            EditOp::Keep => old += 1,
            EditOp::Delete => {
                old += 1;
                out.push(old);
            }
            EditOp::Add => {}
        }
    }
    out
}

/// Renders an edit script as a unified diff with three lines of context.
pub fn render_diff(file: &str, ops: &[EditOp]) -> String {
    // old/new line numbers before each op
    let mut pos = Vec::with_capacity(ops.len());
    let (mut old, mut new) = (1u32, 1u32);
    for op in ops {
        pos.push((old, new));
        match op {
            EditOp::Keep => {
                old += 1;
                new += 1;
            }
            EditOp::Delete => old += 1,
            EditOp::Add => new += 1,
        }
    }
    let changed: Vec<usize> = (0..ops.len()).filter(|&i| ops[i] != EditOp::Keep).collect();
    let mut groups: Vec<(usize, usize)> = Vec::new();
    for &c in &changed {
        let (lo, hi) = (c.saturating_sub(3), (c + 3).min(ops.len() - 1));
        match groups.last_mut() {
            Some(g) if lo <= g.1 + 1 => g.1 = g.1.max(hi),
            _ => groups.push((lo, hi)),
        }
    }
    let mut out = format!("--- a/{file}\n+++ b/{file}\n");
    for (lo, hi) in groups {
        let slice = &ops[lo..=hi];
        let old_count = slice.iter().filter(|o| **o != EditOp::Add).count() as u32;
        let new_count = slice.iter().filter(|o| **o != EditOp::Delete).count() as u32;
        let (mut os, mut ns) = pos[lo];
        if old_count == 0 {
            os -= 1;
        }
        if new_count == 0 {
            ns -= 1;
        }
        out.push_str(&format!("@@ -{os},{old_count} +{ns},{new_count} @@\n"));
        for (k, op) in slice.iter().enumerate() {
            let (o, _) = pos[lo + k];
            match op {
                EditOp::Keep => out.push_str(&format!(" line {o}\n")),
                EditOp::Delete => out.push_str(&format!("-line {o}\n")),
                EditOp::Add => out.push_str("+added\n"),
            }
        }
    }
    out
}

/// Random call tree: `f0` is the root; every other function has a parent
/// that calls it once or twice. Bodies mix arithmetic, memory round trips
/// and calls.
pub fn random_program(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(1..=6);
    let parent: Vec<usize> = (0..n).map(|i| if i == 0 { 0 } else { rng.gen_range(0..i) }).collect();
    let arity: Vec<usize> = (0..n).map(|i| if i == 0 { 0 } else { rng.gen_range(0..=2) }).collect();
    let mut text = String::new();
    for f in 0..n {
        let params: Vec<String> = (0..arity[f]).map(|i| format!("i32 %{i}")).collect();
        text.push_str(&format!("define i32 @f{f}({}) {{\n", params.join(", ")));
        let mut next = arity[f] + 1;
        let mut pool: Vec<String> = (0..arity[f]).map(|i| format!("%{i}")).collect();
        pool.push("7".into());
        let pick = |rng: &mut ChaCha8Rng, pool: &[String]| pool[rng.gen_range(0..pool.len())].clone();
        let mut calls: Vec<usize> = (1..n).filter(|&c| parent[c] == f).flat_map(|c| std::iter::repeat(c).take(rng.gen_range(1..=2))).collect();
        let steps = rng.gen_range(2..=6) + calls.len();
        for _ in 0..steps {
            let choice = if !calls.is_empty() && rng.gen_bool(0.4) { 2 } else { rng.gen_range(0..2) };
            match choice {
                0 => {
                    let (a, b) = (pick(rng, &pool), pick(rng, &pool));
                    text.push_str(&format!("  %{next} = add i32 {a}, {b}\n"));
                    pool.push(format!("%{next}"));
                    next += 1;
                }
                1 => {
                    let v = pick(rng, &pool);
                    text.push_str(&format!("  %{next} = alloca i32\n  store i32 {v}, i32* %{next}\n  %{} = load i32, i32* %{next}\n", next + 1));
                    pool.push(format!("%{}", next + 1));
                    next += 2;
                }
                _ => {
                    let c = calls.pop().unwrap();
                    let args: Vec<String> = (0..arity[c]).map(|_| format!("i32 {}", pick(rng, &pool))).collect();
                    text.push_str(&format!("  %{next} = call i32 @f{c}({})\n", args.join(", ")));
                    pool.push(format!("%{next}"));
                    next += 1;
                }
            }
        }
        for c in calls {
            let args: Vec<String> = (0..arity[c]).map(|_| "i32 1".to_string()).collect();
            text.push_str(&format!("  %{next} = call i32 @f{c}({})\n", args.join(", ")));
            next += 1;
        }
        text.push_str(&format!("  ret i32 {}\n}}\n", pick(rng, &pool)));
    }
    text
}

/// Re-checks SSA on rendered text: no id defined twice, every used id
/// defined earlier (branch targets excepted).
pub fn check_ssa(c: &SemanticCandidate) -> Result<(), String> {
    let mut defined = HashSet::new();
    for s in &c.statements[c.globals..] {
        let tokens = tokenize_line(&s.text).map_err(|e| e.to_string())?;
        let def = match tokens.as_slice() {
            [d, eq, ..] if d.kind == IrTokenKind::Local && eq.is("=") => Some(d.text.clone()),
            _ => None,
        };
        for (i, t) in tokens.iter().enumerate().skip(if def.is_some() { 2 } else { 0 }) {
            let label = i > 0 && tokens[i - 1].is("label");
            if t.kind == IrTokenKind::Local && !label && !defined.contains(&t.text) {
                return Err(format!("{} used before definition in `{}`", t.text, s.text));
            }
        }
        if let Some(d) = def {
            if !defined.insert(d.clone()) {
                return Err(format!("{d} defined twice"));
            }
        }
    }
    Ok(())
}
