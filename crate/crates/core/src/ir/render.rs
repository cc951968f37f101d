//! Normalized statement text for candidates.

use super::lexer::{comment_start, tokenize_line, IrTokenKind};

/// One-line statement text: comments and trailing metadata attachments
/// (`, !dbg !12`, `, !tbaa !4`) removed, continuation lines joined by a
/// single space. All other spelling is preserved.
pub fn clean_statement(raw: &str) -> String {
    let joined = raw
        .lines()
        .map(|l| l[..comment_start(l).unwrap_or(l.len())].trim())
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join(" ");
    let Ok(tokens) = tokenize_line(&joined) else { return joined };
    let mut depth = 0i32;
    for (i, t) in tokens.iter().enumerate() {
        if t.kind != IrTokenKind::Punct {
            continue;
        }
        match t.text.as_str() {
            "(" | "[" | "{" | "<" => depth += 1,
            ")" | "]" | "}" | ">" => depth -= 1,
            "," if depth == 0 && tokens.get(i + 1).is_some_and(|n| n.kind == IrTokenKind::Meta) => {
                return joined[..t.span.start].trim_end().to_string();
            }
            _ => {}
        }
    }
    joined
}

/// Rewrites local references (`%name`): `rename` receives the name without
/// sigil and returns the full replacement text, or `None` to keep it.
pub fn rename_locals(text: &str, mut rename: impl FnMut(&str) -> Option<String>) -> String {
    let Ok(tokens) = tokenize_line(text) else { return text.to_string() };
    let mut out = String::with_capacity(text.len() + 8);
    let mut last = 0;
    for t in tokens.iter().filter(|t| t.kind == IrTokenKind::Local) {
        if let Some(new) = rename(t.name()) {
            out.push_str(&text[last..t.span.start]);
            out.push_str(&new);
            last = t.span.end;
        }
    }
    out.push_str(&text[last..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attachments_and_comments_are_dropped() {
        assert_eq!(clean_statement("%1 = load i8*, i8** @data, align 8, !dbg !19"), "%1 = load i8*, i8** @data, align 8");
        assert_eq!(
            clean_statement("call void @llvm.dbg.declare(metadata i32* %1, metadata !23, metadata !DIExpression()), !dbg !25"),
            "call void @llvm.dbg.declare(metadata i32* %1, metadata !23, metadata !DIExpression())"
        );
        assert_eq!(
            clean_statement("switch i32 %3, label %6 [ ; cases\n    i32 1, label %4\n  ], !dbg !7"),
            "switch i32 %3, label %6 [ i32 1, label %4 ]"
        );
    }

    #[test]
    fn locals_are_renamed_in_place() {
        let s = rename_locals("%2 = call i32 @g(i8* %1, i32 %x)", |n| (n != "x").then(|| format!("%{}", n.parse::<u32>().unwrap() + 16)));
        assert_eq!(s, "%18 = call i32 @g(i8* %17, i32 %x)");
    }
}
