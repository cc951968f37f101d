//! Textual LLVM IR: parsing, debug-line mapping and symbolic linking.
//!
//! Only the parts of the IR that slicing needs are interpreted: SSA ids,
//! value operands, calls, control flow, memory accesses and `!dbg` line
//! attachments. Everything else is kept as raw text.
//!
//! ```
//! use irloc::ir::{parse_ll, InstKind, Operand};
//!
//! let module = parse_ll("define void @f(i32 %0) {\n  %2 = icmp slt i32 100, %0\n  ret void\n}\n", "f.ll").unwrap();
//! let stmt = &module.functions[0].statements[0];
//! assert_eq!(stmt.result.as_deref(), Some("2"));
//! assert_eq!(stmt.opcode, "icmp");
//! assert_eq!(
//!     stmt.operands,
//!     [Operand::Keyword("slt".into()), Operand::Type("i32".into()), Operand::Const("100".into()), Operand::Local("0".into())]
//! );
//! assert!(matches!(stmt.kind, InstKind::Other));
//! ```

mod index;
mod lexer;
mod link;
mod metadata;
mod parse;
mod render;

use std::collections::BTreeSet;
use std::fmt;

pub use index::{read_index, write_index, IndexEntry, ModuleIndex, ProgramGroup};
pub use lexer::{tokenize_line, IrToken, IrTokenKind};
pub use link::{group_and_link, program_of, Callee, LinkedModule};
pub use parse::parse_ll;
pub use render::{clean_statement, rename_locals};

use crate::FileId;

#[derive(Debug, thiserror::Error)]
pub enum IrError {
    #[error("{file}:{line}: {message}")]
    Parse { file: FileId, line: usize, message: String },
    #[error("link error: `{symbol}` is defined in both {first} and {second}")]
    DuplicateDefinition { symbol: String, first: FileId, second: FileId },
    #[error("module index line {line}: {message}")]
    Index { line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
}

/// Source position a statement was generated from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DebugLoc {
    pub file: FileId,
    pub line: u32,
}

impl fmt::Display for DebugLoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.line)
    }
}

/// One classified operand token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    /// Local value reference, name without `%`.
    Local(String),
    /// Global symbol reference, name without `@`.
    Global(String),
    Const(String),
    Type(String),
    Keyword(String),
    /// Basic-block label reference, name without `%`.
    Label(String),
}

/// A value used by an instruction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Local(String),
    Global(String),
    Const(String),
    /// A constant expression (e.g. `getelementptr (... @g ...)`) rooted at a
    /// global.
    ConstExpr { base: Option<String> },
}

impl Value {
    pub fn local(&self) -> Option<&str> {
        match self {
            Value::Local(n) => Some(n),
            _ => None,
        }
    }

    /// The global a value designates, directly or through a constant
    /// expression.
    pub fn global(&self) -> Option<&str> {
        match self {
            Value::Global(n) => Some(n),
            Value::ConstExpr { base: Some(n) } => Some(n),
            _ => None,
        }
    }
}

/// Instruction shapes the analyses care about.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstKind {
    /// A basic-block label line (`5:`); defines the block id.
    Label,
    Alloca,
    Load { ptr: Value },
    Store { value: Value, ptr: Value },
    Call { callee: Option<String>, args: Vec<Value> },
    /// `llvm.dbg.declare` / `llvm.dbg.value`: the described local and the
    /// variable's name and declaration line.
    DbgIntrinsic { value: Option<String>, var_name: Option<String>, var_line: Option<u32> },
    Br { cond: Option<Value>, targets: Vec<String> },
    Switch { cond: Value, targets: Vec<String> },
    Ret { value: Option<Value> },
    Phi { incoming: Vec<(Value, String)> },
    Gep { base: Value },
    Cast { src: Value },
    Unreachable,
    Other,
}

impl InstKind {
    pub fn is_terminator(&self) -> bool {
        matches!(self, InstKind::Br { .. } | InstKind::Switch { .. } | InstKind::Ret { .. } | InstKind::Unreachable)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrStatement {
    /// Local id defined by the statement, without `%`.
    pub result: Option<String>,
    pub opcode: String,
    pub operands: Vec<Operand>,
    pub kind: InstKind,
    pub debug: Option<DebugLoc>,
    /// Original text, possibly spanning lines (e.g. `switch`), without
    /// leading indentation.
    pub raw: String,
    /// 1-based line in the `.ll` file where the statement starts.
    pub ll_line: usize,
}

impl IrStatement {
    /// Local values read by the statement (excluding label references).
    pub fn used_locals(&self) -> impl Iterator<Item = &str> {
        self.operands.iter().filter_map(|o| match o {
            Operand::Local(n) => Some(n.as_str()),
            _ => None,
        })
    }

    pub fn used_globals(&self) -> impl Iterator<Item = &str> {
        self.operands.iter().filter_map(|o| match o {
            Operand::Global(n) => Some(n.as_str()),
            _ => None,
        })
    }

    pub fn is_label(&self) -> bool {
        self.kind == InstKind::Label
    }

    pub fn is_debug_intrinsic(&self) -> bool {
        matches!(self.kind, InstKind::DbgIntrinsic { .. })
    }

    pub fn callee(&self) -> Option<&str> {
        match &self.kind {
            InstKind::Call { callee, .. } => callee.as_deref(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrParam {
    /// Local name without `%`.
    pub name: String,
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrFunction {
    pub name: String,
    pub params: Vec<IrParam>,
    pub statements: Vec<IrStatement>,
    pub is_definition: bool,
    /// `internal`/`private` linkage: visible only inside its module.
    pub internal: bool,
    /// The `define ... {` or `declare ...` line.
    pub header: String,
    /// Name of the implicit entry block when the body does not start with a
    /// label (the numeric slot after the parameters).
    pub entry_label: String,
}

impl IrFunction {
    /// Numeric local ids defined in the function, including parameters and
    /// block labels.
    pub fn numeric_ids(&self) -> BTreeSet<u64> {
        let mut ids: BTreeSet<u64> = self.params.iter().filter_map(|p| p.name.parse().ok()).collect();
        ids.extend(self.entry_label.parse::<u64>().ok());
        ids.extend(self.statements.iter().filter_map(|s| s.result.as_ref()?.parse::<u64>().ok()));
        ids
    }

    /// Raw text of the body, one statement per entry.
    pub fn render_body(&self) -> Vec<&str> {
        self.statements.iter().map(|s| s.raw.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrGlobal {
    pub name: String,
    pub raw: String,
    pub internal: bool,
    /// Declaration only (`external global`).
    pub external: bool,
    /// Symbols referenced by the initializer.
    pub refs: Vec<String>,
    pub debug: Option<DebugLoc>,
    /// Source-level name from debug info, when it differs from `name`.
    pub source_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrModule {
    /// The `.ll` file this module came from.
    pub file: FileId,
    /// `source_filename` from the module header, if present.
    pub source_filename: Option<String>,
    pub functions: Vec<IrFunction>,
    pub globals: Vec<IrGlobal>,
    pub declared_externals: BTreeSet<String>,
}

impl IrModule {
    pub fn function(&self, name: &str) -> Option<&IrFunction> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn defined_function(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name && f.is_definition)
    }

    pub fn global(&self, name: &str) -> Option<&IrGlobal> {
        self.globals.iter().find(|g| g.name == name)
    }

    /// Symbols this module defines with external visibility.
    pub fn exported_symbols(&self) -> impl Iterator<Item = &str> {
        let funcs = self.functions.iter().filter(|f| f.is_definition && !f.internal).map(|f| f.name.as_str());
        let globals = self.globals.iter().filter(|g| !g.internal && !g.external).map(|g| g.name.as_str());
        funcs.chain(globals)
    }

    /// Every global symbol mentioned by code or initializers.
    pub fn referenced_symbols(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        for f in self.functions.iter().filter(|f| f.is_definition) {
            for s in &f.statements {
                out.extend(s.used_globals());
                out.extend(s.callee());
            }
        }
        for g in &self.globals {
            out.extend(g.refs.iter().map(String::as_str));
        }
        out
    }
}

/// Identifies a statement inside a [`LinkedModule`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StmtRef {
    pub module: u32,
    pub function: u32,
    pub index: u32,
}

impl StmtRef {
    pub fn new(module: usize, function: usize, index: usize) -> Self {
        StmtRef { module: module as u32, function: function as u32, index: index as u32 }
    }

    pub fn func(&self) -> FuncRef {
        FuncRef { module: self.module, function: self.function }
    }
}

impl fmt::Display for StmtRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.module, self.function, self.index)
    }
}

/// Identifies a function inside a [`LinkedModule`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FuncRef {
    pub module: u32,
    pub function: u32,
}

impl FuncRef {
    pub fn new(module: usize, function: usize) -> Self {
        FuncRef { module: module as u32, function: function as u32 }
    }

    pub fn stmt(&self, index: usize) -> StmtRef {
        StmtRef { module: self.module, function: self.function, index: index as u32 }
    }
}
