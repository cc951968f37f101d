//! Generic metadata node table plus the few debug-info lookups we need.

use std::collections::HashMap;

use super::lexer::{tokenize_line, IrTokenKind};
use super::DebugLoc;
use crate::FileId;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MetaNode {
    /// `DILocation`, `DIFile`, ... ; `None` for tuples `!{...}`.
    pub kind: Option<String>,
    /// Field values as raw text (`!19`, `6`, `"data"`).
    pub fields: HashMap<String, String>,
}

impl MetaNode {
    pub fn field(&self, key: &str) -> Option<&str> {
        self.fields.get(key).map(String::as_str)
    }

    pub fn string_field(&self, key: &str) -> Option<&str> {
        let v = self.field(key)?;
        v.strip_prefix('"').and_then(|v| v.strip_suffix('"'))
    }

    pub fn number_field(&self, key: &str) -> Option<u32> {
        self.field(key)?.parse().ok()
    }
}

#[derive(Debug, Clone, Default)]
pub struct MetadataTable {
    nodes: HashMap<String, MetaNode>,
}

impl MetadataTable {
    /// Parses a `!N = ...` line. Returns `false` when the line is not a
    /// numbered metadata definition.
    pub fn add_line(&mut self, line: &str) -> bool {
        let Ok(tokens) = tokenize_line(line) else { return false };
        let [id, eq, rest @ ..] = tokens.as_slice() else { return false };
        if id.kind != IrTokenKind::Meta || !eq.is("=") || id.text.len() < 2 || !id.text[1..].chars().all(|c| c.is_ascii_digit()) {
            return false;
        }
        let rest: Vec<_> = rest.iter().skip_while(|t| t.is("distinct")).collect();
        let mut node = MetaNode::default();
        if let Some(head) = rest.first() {
            if head.kind == IrTokenKind::Meta && head.text.len() > 1 {
                node.kind = Some(head.text[1..].to_string());
                // fields: key ':' value (',' key ':' value)*
                let mut depth = 0i32;
                let mut key: Option<String> = None;
                let mut value_start: Option<usize> = None;
                let mut value_end = 0usize;
                for (i, t) in rest.iter().enumerate().skip(1) {
                    match t.text.as_str() {
                        "(" if t.kind == IrTokenKind::Punct => {
                            depth += 1;
                            if depth == 1 {
                                continue;
                            }
                        }
                        ")" if t.kind == IrTokenKind::Punct => {
                            depth -= 1;
                            if depth == 0 {
                                if let (Some(k), Some(s)) = (key.take(), value_start.take()) {
                                    node.fields.insert(k, line[s..value_end].to_string());
                                }
                                break;
                            }
                        }
                        "," if depth == 1 && t.kind == IrTokenKind::Punct => {
                            if let (Some(k), Some(s)) = (key.take(), value_start.take()) {
                                node.fields.insert(k, line[s..value_end].to_string());
                            }
                            continue;
                        }
                        ":" if depth == 1 && key.is_none() && t.kind == IrTokenKind::Punct => {
                            if i > 0 {
                                key = Some(rest[i - 1].text.clone());
                            }
                            continue;
                        }
                        _ => {}
                    }
                    if depth == 1 && key.is_none() {
                        continue;
                    }
                    if value_start.is_none() {
                        value_start = Some(t.span.start);
                    }
                    value_end = t.span.end;
                }
            }
        }
        self.nodes.insert(id.text.clone(), node);
        true
    }

    pub fn get(&self, id: &str) -> Option<&MetaNode> {
        self.nodes.get(id)
    }

    /// Source file of a scope chain (`DISubprogram`, `DILexicalBlock`, ...).
    fn scope_file<'a>(&'a self, mut scope: &'a str) -> Option<FileId> {
        for _ in 0..64 {
            let node = self.get(scope)?;
            if node.kind.as_deref() == Some("DIFile") {
                return node.string_field("filename").map(FileId::new);
            }
            if let Some(file) = node.field("file") {
                return self.get(file)?.string_field("filename").map(FileId::new);
            }
            scope = node.field("scope")?;
        }
        None
    }

    /// Resolves a `!dbg !N` attachment that points at a `DILocation`.
    /// Line 0 (compiler-generated code) yields `None`.
    pub fn location(&self, id: &str) -> Option<DebugLoc> {
        let node = self.get(id)?;
        if node.kind.as_deref() != Some("DILocation") {
            return None;
        }
        let line = node.number_field("line").filter(|&l| l > 0)?;
        let file = self.scope_file(node.field("scope")?)?;
        Some(DebugLoc { file, line })
    }

    /// Name and position of a variable node (`DILocalVariable`,
    /// `DIGlobalVariable`, or a `DIGlobalVariableExpression` wrapping one).
    pub fn variable(&self, id: &str) -> Option<(String, Option<DebugLoc>)> {
        let mut node = self.get(id)?;
        if node.kind.as_deref() == Some("DIGlobalVariableExpression") {
            node = self.get(node.field("var")?)?;
        }
        let name = node.string_field("name")?.to_string();
        let file = node
            .field("file")
            .and_then(|f| self.get(f))
            .and_then(|f| f.string_field("filename"))
            .map(FileId::new)
            .or_else(|| self.scope_file(node.field("scope")?));
        let loc = match (file, node.number_field("line").filter(|&l| l > 0)) {
            (Some(file), Some(line)) => Some(DebugLoc { file, line }),
            _ => None,
        };
        Some((name, loc))
    }
}
