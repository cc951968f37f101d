//! Fine-grained vulnerability detection for C programs.
//!
//! The pipeline extracts syntax-based candidates from C source, slices the
//! program's textual LLVM IR around each candidate, and scores the resulting
//! statement sequences with a bidirectional recurrent network whose output
//! is refined to individual lines.
//!
//! Stages, in pipeline order:
//!
//! * [`frontend`] tokenizes and shallow-parses C, then extracts candidates.
//! * [`ir`] parses `.ll` files and links them into dependency groups.
//! * [`dependence`] builds CFGs, post-dominators and the dependence graph.
//! * [`slicing`] slices the graph per candidate and inlines callee slices.
//! * [`corpus`] labels slices from diffs or direct annotations.
//! * [`encoding`] tokenizes, embeds and pads slices into model inputs.
//! * [`neural`] is the network, its training loop and line-level detection.
//! * [`evaluation`] computes detection metrics and IoU.
//! * [`pipeline`] wires the stages together behind one config file.
//!
//! The accompanying book (under `book/` in the repository) walks through
//! each stage; its code listings are compiled as doctests of this crate.

pub mod corpus;
pub mod dependence;
pub mod encoding;
pub mod evaluation;
pub mod frontend;
pub mod ir;
pub mod neural;
pub mod pipeline;
pub mod seed;
pub mod slicing;
pub mod synthetic;

mod file_id;

pub use file_id::FileId;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/candidates.md")]
    mod candidates {}
    #[doc = include_str!("../../../book/src/ir-and-dependence.md")]
    mod ir_and_dependence {}
    #[doc = include_str!("../../../book/src/slicing.md")]
    mod slicing {}
    #[doc = include_str!("../../../book/src/labeling.md")]
    mod labeling {}
    #[doc = include_str!("../../../book/src/encoding.md")]
    mod encoding {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/detection-and-metrics.md")]
    mod detection_and_metrics {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
}
