//! C-subset frontend: tokenizer, error-tolerant shallow parser and the
//! extraction of syntax-based candidates.
//!
//! Four syntax characteristics are recognized:
//!
//! * **FC** — a call whose callee names a library/API function and whose
//!   arguments mention at least one variable;
//! * **AD** — a variable declaration whose declarator contains `[` and `]`;
//! * **PD** — a variable declaration whose declarator contains `*`;
//! * **AE** — an assignment expression with a variable on its right-hand side.
//!
//! ```
//! use irloc::frontend::{extract_from_source, ApiList, CandidateKind};
//!
//! let api = ApiList::default();
//! let found = extract_from_source("char buf[10]; void f(char *p) { p = buf; }", "a.c", &api).unwrap();
//! let kinds: Vec<_> = found.iter().map(|c| (c.kind, c.line, c.text())).collect();
//! assert_eq!(kinds, [(CandidateKind::AD, 1, "buf".to_string()), (CandidateKind::AE, 1, "p = buf".to_string())]);
//! ```

mod candidates;
mod extract;
mod lexer;
mod parser;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

pub use candidates::{read_candidates, write_candidates, CandidateKind, SyntaxCandidate};
pub use extract::extract_ssyvcs;
pub use lexer::{is_keyword, reconstruct, tokenize_c, SourceToken, TokenKind};
pub use parser::{parse_c_unit, AstNode, NodeKind};

use crate::FileId;

#[derive(Debug, thiserror::Error)]
pub enum FrontendError {
    #[error("{file}:{line}: lex error: {message}")]
    Lex { file: FileId, line: u32, message: String },
    #[error("{file}:{line}:{column}: parse error: {message}")]
    Parse { file: FileId, line: u32, column: u32, message: String },
    #[error("candidate file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// The configured set of library/API function names that seed FC candidates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiList {
    names: BTreeSet<String>,
}

const DEFAULT_API_NAMES: &str = include_str!("../../data/api_names.txt");

impl Default for ApiList {
    /// The bundled list of common libc functions.
    fn default() -> Self {
        ApiList::parse(DEFAULT_API_NAMES)
    }
}

impl ApiList {
    /// One name per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        let names = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        ApiList { names }
    }

    pub fn from_names<I: IntoIterator<Item = S>, S: Into<String>>(names: I) -> Self {
        ApiList { names: names.into_iter().map(Into::into).collect() }
    }

    pub fn load(path: &Path) -> Result<Self, FrontendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| FrontendError::Io { path: path.to_path_buf(), source })?;
        Ok(ApiList::parse(&text))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.contains(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Tokenize, parse and extract in one step.
pub fn extract_from_source(
    source: &str,
    file: impl Into<FileId>,
    api: &ApiList,
) -> Result<Vec<SyntaxCandidate>, FrontendError> {
    let file = file.into();
    let tokens = tokenize_c(source, &file)?;
    let root = parse_c_unit(&tokens)?;
    Ok(extract_ssyvcs(&root, &tokens, api))
}

/// Extracts candidates from every `.c`/`.h` file below `root`, in path order.
/// File ids are paths relative to `root` with `/` separators.
pub fn extract_dir(root: &Path, api: &ApiList) -> Result<Vec<SyntaxCandidate>, FrontendError> {
    let mut out = Vec::new();
    for (path, rel) in source_files(root, &["c", "h"])? {
        let text = std::fs::read_to_string(&path)
            .map_err(|source| FrontendError::Io { path: path.clone(), source })?;
        out.extend(extract_from_source(&text, FileId::new(rel), api)?);
    }
    Ok(out)
}

/// Lists files below `root` with one of `extensions`, sorted by relative
/// path, paired with that relative path (always `/`-separated).
pub fn source_files(root: &Path, extensions: &[&str]) -> Result<Vec<(PathBuf, String)>, FrontendError> {
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| FrontendError::Io {
            path: root.to_path_buf(),
            source: std::io::Error::other(e.to_string()),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let ext = entry.path().extension().and_then(|e| e.to_str()).unwrap_or("");
        if !extensions.contains(&ext) {
            continue;
        }
        let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
        let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        files.push((entry.path().to_path_buf(), rel));
    }
    files.sort_by(|a, b| a.1.cmp(&b.1));
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn api_list_ignores_comments_and_blanks() {
        let api = ApiList::parse("# libc\nmemcpy\n\n  strcpy  # copy\n");
        assert!(api.contains("memcpy") && api.contains("strcpy"));
        assert_eq!(api.len(), 2);
    }

    #[test]
    fn default_list_has_the_usual_suspects() {
        let api = ApiList::default();
        for n in ["memcpy", "memset", "memmove", "strcpy", "printf", "malloc", "free"] {
            assert!(api.contains(n), "{n}");
        }
    }
}
