//! Control-flow graphs, post-dominators and the statement-level dependence
//! graph over a linked module.
//!
//! An edge `from → to` means `to` depends on `from`: `to` uses a value or
//! memory that `from` defines, or `from` decides whether `to` executes.
//!
//! ```
//! use irloc::dependence::{build_dependence_graph, EdgeKind};
//! use irloc::ir::{parse_ll, LinkedModule};
//!
//! let text = "define i32 @f(i32 %0) {\n  %2 = alloca i32\n  store i32 %0, i32* %2\n  %3 = load i32, i32* %2\n  ret i32 %3\n}\n";
//! let linked = LinkedModule::link(vec![parse_ll(text, "f.ll").unwrap()]).unwrap();
//! let graph = build_dependence_graph(&linked).unwrap();
//! let f = linked.functions["f"];
//! // the store writes %2 and the load reads it back
//! assert!(graph.has_edge(f.stmt(1), f.stmt(2), EdgeKind::Data));
//! // the ret uses the loaded value
//! assert!(graph.has_edge(f.stmt(2), f.stmt(3), EdgeKind::Data));
//! ```

mod cfg;
mod effects;
mod graph;

pub use cfg::{build_cfg, control_dependences, post_dominators, BasicBlock, BranchKind, Cfg};
pub use effects::{base_name, external_effect, Effect};
pub use graph::{build_dependence_graph, write_edges, DependenceGraph, Edge, EdgeKind};

#[derive(Debug, thiserror::Error)]
pub enum DependenceError {
    #[error("function @{function}: {message}")]
    Structure { function: String, message: String },
}
