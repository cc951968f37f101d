//! From syntax candidates to semantic candidates: locate each candidate in
//! the IR, slice the dependence graph in both directions, and splice callee
//! slices into their callers.
//!
//! ```
//! use std::collections::BTreeSet;
//! use irloc::dependence::DependenceGraph;
//! use irloc::ir::StmtRef;
//! use irloc::slicing::slice;
//!
//! // 0 → 1 → 2 and 3 → 1: slicing at 1 reaches everything, slicing at 3
//! // reaches only what 3 feeds
//! let g = DependenceGraph::from_edges(5, &[(0, 1), (1, 2), (3, 1)]);
//! let at = |i| BTreeSet::from([StmtRef::new(0, 0, i)]);
//! assert_eq!(slice(&g, &at(1)).len(), 4);
//! assert_eq!(slice(&g, &at(3)).iter().map(|s| s.index).collect::<Vec<_>>(), [1, 2, 3]);
//! assert_eq!(slice(&g, &at(4)).len(), 1);
//! ```

mod anchor;
mod inline;
mod slice;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

pub use anchor::locate_anchor;
pub use inline::call_argument_values;
pub use slice::{complete_definitions, slice};

use crate::dependence::{build_dependence_graph, DependenceError, DependenceGraph};
use crate::frontend::{CandidateKind, SyntaxCandidate};
use crate::ir::{clean_statement, program_of, DebugLoc, IrGlobal, LinkedModule, ProgramGroup, StmtRef};
use crate::FileId;

/// Where a candidate statement came from in the IR.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Origin {
    /// Statement `index` of `function` in the `.ll` file `module`.
    Statement { module: FileId, function: String, index: usize },
    /// A global variable definition, emitted as a header statement.
    Global { module: FileId, name: String },
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Statement { module, function, index } => write!(f, "{module}:{function}#{index}"),
            Origin::Global { module, name } => write!(f, "{module}:@{name}"),
        }
    }
}

impl FromStr for Origin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (module, rest) = s.rsplit_once(':').ok_or_else(|| format!("bad statement origin `{s}`"))?;
        let module = FileId::new(module);
        if let Some(name) = rest.strip_prefix('@') {
            return Ok(Origin::Global { module, name: name.to_string() });
        }
        let (function, index) = rest.rsplit_once('#').ok_or_else(|| format!("bad statement origin `{s}`"))?;
        let index = index.parse().map_err(|_| format!("bad statement index in `{s}`"))?;
        Ok(Origin::Statement { module, function: function.to_string(), index })
    }
}

/// One statement of a semantic candidate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateStatement {
    /// Rendered IR text: renumbered ids, metadata attachments removed.
    pub text: String,
    /// Source line the statement was generated from; `None` when the IR
    /// has no debug location for it.
    pub debug: Option<DebugLoc>,
    pub origin: Origin,
}

/// A semantic candidate: the sliced, inlined IR of one syntax candidate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticCandidate {
    pub id: String,
    pub kind: CandidateKind,
    pub file: FileId,
    pub line: u32,
    /// Index of the first anchor statement in `statements`.
    pub anchor: usize,
    /// The first `globals` statements are global variable definitions the
    /// slice references.
    pub globals: usize,
    pub statements: Vec<CandidateStatement>,
    /// Functions contributing statements, in order of first appearance.
    pub functions: Vec<String>,
}

impl SemanticCandidate {
    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.statements.iter().map(|s| s.text.as_str())
    }
}

/// Why a syntax candidate produced no semantic candidate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkipReason {
    /// No linked module was compiled from the candidate's file.
    NoModule,
    /// The candidate's line produced no IR statement.
    AnchorNotFound,
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SkipReason::NoModule => "no IR module for file",
            SkipReason::AnchorNotFound => "anchor not found",
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct SliceOutcome {
    pub candidates: Vec<SemanticCandidate>,
    /// Candidate id and reason, in input order.
    pub skipped: Vec<(String, SkipReason)>,
}

/// Candidate ids follow the row order of the candidate list: `c1`, `c2`, …
pub fn candidate_id(row: usize) -> String {
    format!("c{}", row + 1)
}

fn global_origin<'a>(linked: &'a LinkedModule, module: u32, name: &str) -> Option<(usize, &'a IrGlobal)> {
    let own = &linked.members[module as usize];
    if let Some(g) = own.global(name).filter(|g| !g.external) {
        return Some((module as usize, g));
    }
    linked
        .members
        .iter()
        .enumerate()
        .find_map(|(mi, m)| m.global(name).filter(|g| !g.external && !g.internal).map(|g| (mi, g)))
        .or_else(|| own.global(name).map(|g| (module as usize, g)))
}

/// Builds one semantic candidate from a located anchor.
pub fn build_candidate(
    id: String,
    c: &SyntaxCandidate,
    linked: &LinkedModule,
    graph: &DependenceGraph,
    anchor: &BTreeSet<StmtRef>,
) -> SemanticCandidate {
    let mut sliced = slice(graph, anchor);
    complete_definitions(linked, &mut sliced);
    let assembly = inline::assemble(linked, &sliced);

    let mut header = Vec::new();
    let mut seen = BTreeSet::new();
    for r in &assembly.refs {
        for name in linked.statement(*r).used_globals() {
            let Some((mi, g)) = global_origin(linked, r.module, name) else { continue };
            if seen.insert((mi, g.name.clone())) {
                header.push(CandidateStatement {
                    text: clean_statement(&g.raw),
                    debug: g.debug.clone(),
                    origin: Origin::Global { module: linked.members[mi].file.clone(), name: g.name.clone() },
                });
            }
        }
    }
    let globals = header.len();
    let anchor_pos = assembly.refs.iter().position(|r| anchor.contains(r)).unwrap_or(0);
    header.extend(assembly.statements);
    SemanticCandidate {
        id,
        kind: c.kind,
        file: c.file.clone(),
        line: c.line,
        anchor: globals + anchor_pos,
        globals,
        statements: header,
        functions: assembly.functions,
    }
}

/// The group a candidate's file was compiled into: same program directory
/// first, then any group whose debug info names the file.
pub fn group_for(c: &SyntaxCandidate, groups: &[ProgramGroup]) -> Option<usize> {
    let program = program_of(c.file.as_str());
    groups
        .iter()
        .position(|g| g.program == program && g.linked.covers_file(&c.file))
        .or_else(|| groups.iter().position(|g| g.linked.covers_file(&c.file)))
}

/// Locate → slice → inline for every candidate. Dependence graphs are
/// built once per group; candidates are processed in parallel and returned
/// in input order.
pub fn generate_isevcs(candidates: &[SyntaxCandidate], groups: &[ProgramGroup]) -> Result<SliceOutcome, DependenceError> {
    let placement: Vec<Option<usize>> = candidates.par_iter().map(|c| group_for(c, groups)).collect();
    let needed: BTreeSet<usize> = placement.iter().flatten().copied().collect();
    let graphs: BTreeMap<usize, DependenceGraph> = needed
        .into_par_iter()
        .map(|g| Ok((g, build_dependence_graph(&groups[g].linked)?)))
        .collect::<Result<_, DependenceError>>()?;
    let results: Vec<Result<SemanticCandidate, SkipReason>> = candidates
        .par_iter()
        .zip(placement.par_iter())
        .enumerate()
        .map(|(row, (c, g))| {
            let g = g.ok_or(SkipReason::NoModule)?;
            let linked = &groups[g].linked;
            let anchor = locate_anchor(c, linked);
            if anchor.is_empty() {
                return Err(SkipReason::AnchorNotFound);
            }
            Ok(build_candidate(candidate_id(row), c, linked, &graphs[&g], &anchor))
        })
        .collect();
    let mut outcome = SliceOutcome::default();
    for (row, r) in results.into_iter().enumerate() {
        match r {
            Ok(c) => outcome.candidates.push(c),
            Err(reason) => {
                log::debug!("skipping {}: {reason}", candidate_id(row));
                outcome.skipped.push((candidate_id(row), reason));
            }
        }
    }
    Ok(outcome)
}
