use crate::FileId;

use super::FrontendError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TokenKind {
    Identifier,
    Keyword,
    Operator,
    Constant,
    StringLiteral,
    Punctuation,
}

/// One lexical token of a C source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceToken {
    pub text: String,
    pub kind: TokenKind,
    pub file: FileId,
    /// 1-based.
    pub line: u32,
    /// 1-based, counted in characters.
    pub column: u32,
    /// Whitespace between the previous token and this one. Comments are
    /// replaced by blanks with their newlines kept, so line numbers survive
    /// reconstruction.
    pub leading: String,
    /// Part of a preprocessor directive line.
    pub directive: bool,
}

const KEYWORDS: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else",
    "enum", "extern", "float", "for", "goto", "if", "inline", "int", "long", "register",
    "restrict", "return", "short", "signed", "sizeof", "static", "struct", "switch", "typedef",
    "union", "unsigned", "void", "volatile", "while", "_Alignas", "_Alignof", "_Atomic", "_Bool",
    "_Complex", "_Generic", "_Imaginary", "_Noreturn", "_Static_assert", "_Thread_local",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

// Longest first within each length class.
const OPERATORS: &[&str] = &[
    ">>=", "<<=", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "*=", "/=",
    "%=", "+=", "-=", "&=", "^=", "|=", "##", "+", "-", "*", "/", "%", "<", ">", "=", "!", "~",
    "&", "|", "^", "?", ":", ".",
];

const PUNCTUATION: &[&str] = &["...", "(", ")", "[", "]", "{", "}", ";", ",", "#"];

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    column: u32,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.rest().chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

/// Splits C source text into tokens. Comments are dropped; preprocessor
/// directive lines are tokenized and flagged so the parser can skip them.
pub fn tokenize_c(source: &str, file: &FileId) -> Result<Vec<SourceToken>, FrontendError> {
    let mut cur = Cursor { src: source, pos: 0, line: 1, column: 1 };
    let mut tokens = Vec::new();
    let mut leading = String::new();
    let mut at_line_start = true;
    let mut in_directive = false;
    let mut directive_words = 0usize;
    let mut include_directive = false;

    while let Some(c) = cur.peek() {
        // whitespace, line splices and comments
        if c == '\n' {
            cur.bump();
            leading.push('\n');
            at_line_start = true;
            in_directive = false;
            continue;
        }
        if c.is_whitespace() {
            cur.bump();
            leading.push(c);
            continue;
        }
        if c == '\\' && matches!(cur.peek_at(1), Some('\n')) {
            cur.bump();
            cur.bump();
            leading.push_str(" \n");
            continue;
        }
        if c == '\\' && cur.peek_at(1) == Some('\r') && cur.peek_at(2) == Some('\n') {
            cur.bump();
            cur.bump();
            cur.bump();
            leading.push_str("  \n");
            continue;
        }
        if cur.rest().starts_with("//") {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
                leading.push(' ');
            }
            continue;
        }
        if cur.rest().starts_with("/*") {
            let start_line = cur.line;
            cur.bump();
            cur.bump();
            leading.push_str("  ");
            loop {
                if cur.rest().starts_with("*/") {
                    cur.bump();
                    cur.bump();
                    leading.push_str("  ");
                    break;
                }
                match cur.bump() {
                    Some('\n') => leading.push('\n'),
                    Some(_) => leading.push(' '),
                    None => {
                        return Err(FrontendError::Lex {
                            file: file.clone(),
                            line: start_line,
                            message: "unterminated comment".into(),
                        })
                    }
                }
            }
            continue;
        }

        let (line, column, start) = (cur.line, cur.column, cur.pos);
        let kind = if c == '#' && at_line_start {
            cur.bump();
            in_directive = true;
            directive_words = 0;
            include_directive = false;
            TokenKind::Punctuation
        } else if in_directive && include_directive && c == '<' {
            while let Some(c) = cur.bump() {
                if c == '>' {
                    break;
                }
                if c == '\n' {
                    return Err(FrontendError::Lex {
                        file: file.clone(),
                        line,
                        message: "unterminated header name".into(),
                    });
                }
            }
            TokenKind::StringLiteral
        } else if is_ident_start(c) {
            // prefixed literals: L"..", u8"..", u'x', ...
            let prefix_len = literal_prefix_len(cur.rest());
            if prefix_len > 0 {
                for _ in 0..prefix_len {
                    cur.bump();
                }
                let quote = cur.peek().unwrap();
                lex_quoted(&mut cur, quote, file, line)?;
                if quote == '"' {
                    TokenKind::StringLiteral
                } else {
                    TokenKind::Constant
                }
            } else {
                while cur.peek().is_some_and(is_ident_continue) {
                    cur.bump();
                }
                let word = &source[start..cur.pos];
                if in_directive {
                    if directive_words == 0 && word == "include" {
                        include_directive = true;
                    }
                    directive_words += 1;
                }
                if is_keyword(word) {
                    TokenKind::Keyword
                } else {
                    TokenKind::Identifier
                }
            }
        } else if c.is_ascii_digit() || (c == '.' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            lex_number(&mut cur);
            TokenKind::Constant
        } else if c == '"' {
            lex_quoted(&mut cur, '"', file, line)?;
            TokenKind::StringLiteral
        } else if c == '\'' {
            lex_quoted(&mut cur, '\'', file, line)?;
            TokenKind::Constant
        } else if let Some(p) = PUNCTUATION.iter().find(|p| cur.rest().starts_with(**p)) {
            for _ in 0..p.len() {
                cur.bump();
            }
            TokenKind::Punctuation
        } else if let Some(op) = OPERATORS.iter().find(|o| cur.rest().starts_with(**o)) {
            for _ in 0..op.len() {
                cur.bump();
            }
            TokenKind::Operator
        } else {
            // stray characters (`@`, `$`, `` ` ``) become single-character operators
            cur.bump();
            TokenKind::Operator
        };

        at_line_start = false;
        tokens.push(SourceToken {
            text: source[start..cur.pos].to_string(),
            kind,
            file: file.clone(),
            line,
            column,
            leading: std::mem::take(&mut leading),
            directive: in_directive,
        });
    }
    Ok(tokens)
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn literal_prefix_len(rest: &str) -> usize {
    for p in ["u8", "u", "U", "L"] {
        if let Some(after) = rest.strip_prefix(p) {
            if after.starts_with('"') || (p != "u8" && after.starts_with('\'')) {
                return p.len();
            }
        }
    }
    0
}

fn lex_number(cur: &mut Cursor<'_>) {
    // pp-number: digits, identifier characters, dots and signed exponents
    let mut prev = '\0';
    while let Some(c) = cur.peek() {
        let exp_sign = (c == '+' || c == '-') && matches!(prev, 'e' | 'E' | 'p' | 'P');
        if c.is_ascii_alphanumeric() || c == '.' || c == '_' || exp_sign {
            prev = c;
            cur.bump();
        } else {
            break;
        }
    }
}

fn lex_quoted(cur: &mut Cursor<'_>, quote: char, file: &FileId, line: u32) -> Result<(), FrontendError> {
    cur.bump();
    loop {
        match cur.bump() {
            Some('\\') => {
                if cur.bump().is_none() {
                    break;
                }
            }
            Some(c) if c == quote => return Ok(()),
            Some('\n') | None => break,
            Some(_) => {}
        }
    }
    let what = if quote == '"' { "string literal" } else { "character constant" };
    Err(FrontendError::Lex { file: file.clone(), line, message: format!("unterminated {what}") })
}

/// Rebuilds source text from tokens and their recorded leading whitespace.
/// Comments come back as blanks, so every token keeps its line and column.
pub fn reconstruct(tokens: &[SourceToken]) -> String {
    let mut out = String::new();
    for t in tokens {
        out.push_str(&t.leading);
        out.push_str(&t.text);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex(s: &str) -> Vec<SourceToken> {
        tokenize_c(s, &FileId::new("t.c")).unwrap()
    }

    fn texts(s: &str) -> Vec<String> {
        lex(s).into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn pointer_declaration() {
        let toks = lex("char *data;");
        let got: Vec<_> = toks.iter().map(|t| (t.kind, t.text.as_str())).collect();
        assert_eq!(
            got,
            vec![
                (TokenKind::Keyword, "char"),
                (TokenKind::Operator, "*"),
                (TokenKind::Identifier, "data"),
                (TokenKind::Punctuation, ";"),
            ]
        );
    }

    #[test]
    fn assignment_has_six_tokens() {
        let t = texts("data = dataBuffer - 8;");
        assert_eq!(t, ["data", "=", "dataBuffer", "-", "8", ";"]);
    }

    #[test]
    fn comments_are_dropped() {
        assert_eq!(texts("/*x*/ int a;"), ["int", "a", ";"]);
        assert_eq!(texts("int a; // trailing\nint b;"), ["int", "a", ";", "int", "b", ";"]);
    }

    #[test]
    fn positions_are_one_based() {
        let toks = lex("int a;\n  b = 1;");
        let b = &toks[3];
        assert_eq!((b.text.as_str(), b.line, b.column), ("b", 2, 3));
    }

    #[test]
    fn multi_char_operators_and_literals() {
        assert_eq!(texts("p->x <<= 2;"), ["p", "->", "x", "<<=", "2", ";"]);
        assert_eq!(texts("c = '\\0';"), ["c", "=", "'\\0'", ";"]);
        assert_eq!(texts("s = L\"wide\";"), ["s", "=", "L\"wide\"", ";"]);
        assert_eq!(texts("x = 1.5e-3f;"), ["x", "=", "1.5e-3f", ";"]);
        assert_eq!(texts("f(a, ...);"), ["f", "(", "a", ",", "...", ")", ";"]);
    }

    #[test]
    fn directives_are_flagged() {
        let toks = lex("#include <stdio.h>\n#define N 100\nint x;");
        let flagged: Vec<_> = toks.iter().filter(|t| t.directive).map(|t| t.text.as_str()).collect();
        assert_eq!(flagged, ["#", "include", "<stdio.h>", "#", "define", "N", "100"]);
        assert!(toks.iter().filter(|t| !t.directive).all(|t| t.line == 3));
    }

    #[test]
    fn continued_directive_stays_flagged() {
        let toks = lex("#define M(a) \\\n  (a + 1)\nint y;");
        assert!(toks.iter().take_while(|t| t.text != "int").all(|t| t.directive));
        assert!(!toks.iter().find(|t| t.text == "int").unwrap().directive);
    }

    #[test]
    fn unterminated_inputs_report_the_line() {
        let err = tokenize_c("int a;\n/* open", &FileId::new("x.c")).unwrap_err();
        assert!(matches!(err, FrontendError::Lex { line: 2, .. }));
        let err = tokenize_c("\n\nchar *s = \"abc;\n", &FileId::new("x.c")).unwrap_err();
        assert!(matches!(err, FrontendError::Lex { line: 3, .. }));
    }

    #[test]
    fn reconstruction_preserves_positions() {
        let src = "int a; /* c\n c */ int b;\n";
        let toks = lex(src);
        let rebuilt = reconstruct(&toks);
        let again = lex(&rebuilt);
        let pos = |v: &[SourceToken]| v.iter().map(|t| (t.text.clone(), t.line, t.column)).collect::<Vec<_>>();
        assert_eq!(pos(&toks), pos(&again));
    }
}
