//! Tokenizer for single lines of textual LLVM IR.

use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IrTokenKind {
    /// `%name`, `%N`, `%"quoted"`.
    Local,
    /// `@name`, `@N`, `@"quoted"`.
    Global,
    /// `!name`, `!N`, `!DIThing`, `!{`-openers are split into `!` + `{`.
    Meta,
    /// `"..."`.
    Str,
    /// `c"..."`.
    CStr,
    /// Integer, float or hex literal.
    Number,
    /// Keywords, types, opcodes, attributes (`#0` included).
    Word,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrToken {
    pub kind: IrTokenKind,
    pub text: String,
    /// Byte range in the line.
    pub span: Range<usize>,
}

impl IrToken {
    /// For locals and globals: the name without sigil or quotes.
    pub fn name(&self) -> &str {
        let body = &self.text[1..];
        body.strip_prefix('"').and_then(|b| b.strip_suffix('"')).unwrap_or(body)
    }

    pub fn is(&self, text: &str) -> bool {
        self.text == text && matches!(self.kind, IrTokenKind::Punct | IrTokenKind::Word)
    }
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '$' | '-')
}

/// Tokenizes one line. A `;` outside a string starts a comment, which is
/// dropped. Unknown characters become one-character punctuation.
pub fn tokenize_line(line: &str) -> Result<Vec<IrToken>, String> {
    let bytes: Vec<(usize, char)> = line.char_indices().collect();
    let end_of = |i: usize| bytes.get(i).map(|b| b.0).unwrap_or(line.len());
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let (start, c) = bytes[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == ';' {
            break;
        }
        let scan_quoted = |mut j: usize| -> Result<usize, String> {
            // j points at the opening quote
            j += 1;
            while j < bytes.len() && bytes[j].1 != '"' {
                j += 1;
            }
            if j >= bytes.len() {
                return Err(format!("unterminated string at column {}", start + 1));
            }
            Ok(j + 1)
        };
        let (kind, next) = match c {
            '%' | '@' | '!' => {
                let kind = match c {
                    '%' => IrTokenKind::Local,
                    '@' => IrTokenKind::Global,
                    _ => IrTokenKind::Meta,
                };
                if bytes.get(i + 1).is_some_and(|b| b.1 == '"') {
                    (kind, scan_quoted(i + 1)?)
                } else {
                    let mut j = i + 1;
                    while j < bytes.len() && is_name_char(bytes[j].1) {
                        j += 1;
                    }
                    if j == i + 1 && c != '!' {
                        return Err(format!("empty name after `{c}` at column {}", start + 1));
                    }
                    (kind, j)
                }
            }
            '"' => (IrTokenKind::Str, scan_quoted(i)?),
            'c' if bytes.get(i + 1).is_some_and(|b| b.1 == '"') => (IrTokenKind::CStr, scan_quoted(i + 1)?),
            '.' if line[start..].starts_with("...") => (IrTokenKind::Punct, i + 3),
            _ if c.is_ascii_digit() || (c == '-' && bytes.get(i + 1).is_some_and(|b| b.1.is_ascii_digit())) => {
                let mut j = i + 1;
                while j < bytes.len() {
                    let d = bytes[j].1;
                    let sign = (d == '+' || d == '-') && matches!(bytes[j - 1].1, 'e' | 'E');
                    if d.is_ascii_alphanumeric() || d == '.' || sign {
                        j += 1;
                    } else {
                        break;
                    }
                }
                // `5:` style labels are numbers followed by ':' — fine either way
                (IrTokenKind::Number, j)
            }
            _ if c.is_ascii_alphabetic() || c == '_' || c == '#' || c == '$' => {
                let mut j = i + 1;
                while j < bytes.len() && is_name_char(bytes[j].1) {
                    j += 1;
                }
                (IrTokenKind::Word, j)
            }
            _ => (IrTokenKind::Punct, i + 1),
        };
        let span = start..end_of(next);
        out.push(IrToken { kind, text: line[span.clone()].to_string(), span });
        i = next;
    }
    Ok(out)
}

/// Byte offset where a trailing `;` comment starts (outside strings).
pub fn comment_start(line: &str) -> Option<usize> {
    let mut in_str = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_str = !in_str,
            ';' if !in_str => return Some(i),
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(line: &str) -> Vec<(IrTokenKind, String)> {
        tokenize_line(line).unwrap().into_iter().map(|t| (t.kind, t.text)).collect()
    }

    #[test]
    fn icmp_line() {
        use IrTokenKind::*;
        assert_eq!(
            kinds("%6 = icmp slt i32 100, %5, !dbg !35"),
            vec![
                (Local, "%6".into()),
                (Punct, "=".into()),
                (Word, "icmp".into()),
                (Word, "slt".into()),
                (Word, "i32".into()),
                (Number, "100".into()),
                (Punct, ",".into()),
                (Local, "%5".into()),
                (Punct, ",".into()),
                (Meta, "!dbg".into()),
                (Meta, "!35".into()),
            ]
        );
    }

    #[test]
    fn strings_names_and_comments() {
        let t = tokenize_line(r#"@.str = private constant [4 x i8] c"%s;\0A\00" ; trailing"#).unwrap();
        assert_eq!(t[0].name(), ".str");
        assert_eq!(t.last().unwrap().kind, IrTokenKind::CStr);
        let q = tokenize_line(r#"call void @"odd name"(i32 -8)"#).unwrap();
        assert_eq!(q[2].name(), "odd name");
        assert_eq!(q[5].text, "-8");
        assert_eq!(comment_start("br label %3 ; preds = %1"), Some(12));
        assert_eq!(comment_start(r#"c";""#), None);
    }

    #[test]
    fn floats_and_varargs() {
        let t = kinds("call i32 (i8*, ...) @printf(double 1.5e+00)");
        assert!(t.contains(&(IrTokenKind::Punct, "...".into())));
        assert!(t.contains(&(IrTokenKind::Number, "1.5e+00".into())));
    }

    #[test]
    fn unterminated_string_is_an_error() {
        assert!(tokenize_line(r#"@s = constant c"abc"#).is_err());
    }
}
