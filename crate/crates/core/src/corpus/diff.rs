//! Unified diff reading: which pre-patch lines a fix deleted or moved.

use std::collections::BTreeSet;

use super::CorpusError;
use crate::FileId;

/// Pre-patch lines touched by a diff.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DiffLines {
    /// `(file, line)` of every `-` line, line numbers of the old file.
    pub removed: BTreeSet<(FileId, u32)>,
    /// Number of `+` lines.
    pub added: usize,
}

impl DiffLines {
    /// A diff that only adds code names no vulnerable line.
    pub fn is_addition_only(&self) -> bool {
        self.removed.is_empty() && self.added > 0
    }
}

fn strip_side(path: &str) -> &str {
    let path = path.split('\t').next().unwrap_or(path).trim();
    path.strip_prefix("a/").or_else(|| path.strip_prefix("b/")).unwrap_or(path)
}

/// `@@ -start[,count] +start[,count] @@` → (old start, old count, new count).
fn hunk_header(line: &str) -> Option<(u32, u32, u32)> {
    let body = line.strip_prefix("@@ ")?;
    let (ranges, _) = body.split_once(" @@")?;
    let (old, new) = ranges.split_once(' ')?;
    let range = |r: &str, sign: char| -> Option<(u32, u32)> {
        let r = r.strip_prefix(sign)?;
        match r.split_once(',') {
            Some((s, c)) => Some((s.parse().ok()?, c.parse().ok()?)),
            None => Some((r.parse().ok()?, 1)),
        }
    };
    let (os, oc) = range(old, '-')?;
    let (_, nc) = range(new, '+')?;
    Some((os, oc, nc))
}

/// Collects the old-file line numbers of all `-` lines (not `---` file
/// headers). Hunk bodies are delimited by the counts in their headers.
pub fn parse_diff(text: &str) -> Result<DiffLines, CorpusError> {
    let mut out = DiffLines::default();
    let mut old_file: Option<String> = None;
    let mut file: Option<FileId> = None;
    let mut lines = text.lines().enumerate().peekable();
    while let Some((no, line)) = lines.next() {
        if let Some(p) = line.strip_prefix("--- ") {
            old_file = Some(strip_side(p).to_string());
            continue;
        }
        if let Some(p) = line.strip_prefix("+++ ") {
            let new = strip_side(p);
            let name = match old_file.take() {
                Some(o) if o != "/dev/null" => o,
                _ => new.to_string(),
            };
            file = Some(FileId::new(name));
            continue;
        }
        if !line.starts_with("@@") {
            continue;
        }
        let bad = |message: &str| CorpusError::Format { record: None, line: no + 1, message: message.to_string() };
        let (mut old_line, mut old_left, mut new_left) = hunk_header(line).ok_or_else(|| bad("malformed hunk header"))?;
        let file = file.clone().ok_or_else(|| bad("hunk before file header"))?;
        if old_left == 0 {
            // pure insertion: the start number names the line before it
            old_line += 1;
        }
        while old_left > 0 || new_left > 0 {
            let Some((no, body)) = lines.next() else {
                return Err(CorpusError::Format { record: None, line: no + 1, message: "hunk ends early".into() });
            };
            let bad_line = |message: &str| CorpusError::Format { record: None, line: no + 1, message: message.to_string() };
            match body.chars().next() {
                Some('-') if old_left > 0 => {
                    out.removed.insert((file.clone(), old_line));
                    old_line += 1;
                    old_left -= 1;
                }
                Some('+') if new_left > 0 => {
                    out.added += 1;
                    new_left -= 1;
                }
                Some(' ') | None if old_left > 0 && new_left > 0 => {
                    old_line += 1;
                    old_left -= 1;
                    new_left -= 1;
                }
                Some('\\') => {}
                _ => return Err(bad_line("hunk body does not match its header counts")),
            }
        }
        // "\ No newline at end of file" after the last body line
        while lines.peek().is_some_and(|(_, l)| l.starts_with('\\')) {
            lines.next();
        }
    }
    Ok(out)
}
