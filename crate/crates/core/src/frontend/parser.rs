use std::collections::HashSet;
use std::ops::Range;

use super::lexer::{SourceToken, TokenKind};
use super::FrontendError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    TranslationUnit,
    FunctionDef,
    VarDeclaration,
    CallExpr,
    AssignmentExpr,
    DeclRefExpr,
    Other,
}

/// A node of the shallow AST. Spans are half-open ranges of indices into the
/// token slice handed to [`parse_c_unit`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AstNode {
    pub kind: NodeKind,
    pub span: Range<usize>,
    /// Function name, declared variable, called function or referenced name.
    pub name: Option<String>,
    pub name_token: Option<usize>,
    pub children: Vec<AstNode>,
    /// Where the node divides into two parts: the end of the declarator of a
    /// variable declaration (start of `= init`, or `span.end`), the operator
    /// of an assignment, or the opening parenthesis of a call's arguments.
    pub split: Option<usize>,
}

impl AstNode {
    fn leaf(kind: NodeKind, span: Range<usize>) -> Self {
        AstNode { kind, span, name: None, name_token: None, children: Vec::new(), split: None }
    }

    fn other(span: Range<usize>, children: Vec<AstNode>) -> Self {
        AstNode { children, ..AstNode::leaf(NodeKind::Other, span) }
    }

    /// Pre-order traversal.
    pub fn walk(&self, f: &mut impl FnMut(&AstNode)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }

    /// For a call: the argument nodes (children after the opening parenthesis).
    pub fn call_arguments(&self) -> &[AstNode] {
        let split = self.split.unwrap_or(self.span.start);
        let first = self.children.iter().position(|c| c.span.start > split).unwrap_or(self.children.len());
        &self.children[first..]
    }
}

/// Parses a whole translation unit. Preprocessor directive tokens are
/// skipped; unrecognized constructs become `Other` nodes.
pub fn parse_c_unit(tokens: &[SourceToken]) -> Result<AstNode, FrontendError> {
    let visible: Vec<usize> = (0..tokens.len()).filter(|&i| !tokens[i].directive).collect();
    check_balance(tokens, &visible)?;
    let mut p = Parser { tokens, idx: visible, pos: 0, typedefs: collect_typedefs(tokens) };
    let mut children = Vec::new();
    while !p.at_end() {
        let before = p.pos;
        if let Some(node) = p.external_declaration() {
            children.push(node);
        }
        if p.pos == before {
            // never stall on a stray token
            let start = p.pos;
            p.pos += 1;
            children.push(AstNode::leaf(NodeKind::Other, p.range(start, p.pos)));
        }
    }
    Ok(AstNode::other(0..tokens.len(), children).with_kind(NodeKind::TranslationUnit))
}

impl AstNode {
    fn with_kind(mut self, kind: NodeKind) -> Self {
        self.kind = kind;
        self
    }
}

fn check_balance(tokens: &[SourceToken], visible: &[usize]) -> Result<(), FrontendError> {
    let mut stack: Vec<usize> = Vec::new();
    for &i in visible {
        let t = &tokens[i];
        if t.kind != TokenKind::Punctuation {
            continue;
        }
        let want = match t.text.as_str() {
            "(" | "[" | "{" => {
                stack.push(i);
                continue;
            }
            ")" => "(",
            "]" => "[",
            "}" => "{",
            _ => continue,
        };
        match stack.pop() {
            Some(open) if tokens[open].text == want => {}
            Some(open) => {
                return Err(parse_error(t, format!("`{}` closes `{}` opened at line {}", t.text, tokens[open].text, tokens[open].line)))
            }
            None => return Err(parse_error(t, format!("unmatched `{}`", t.text))),
        }
    }
    if let Some(open) = stack.pop() {
        return Err(parse_error(&tokens[open], format!("unclosed `{}`", tokens[open].text)));
    }
    Ok(())
}

fn parse_error(t: &SourceToken, message: String) -> FrontendError {
    FrontendError::Parse { file: t.file.clone(), line: t.line, column: t.column, message }
}

/// Names introduced by `typedef`, found by a quick scan: the last identifier
/// at parenthesis depth zero before the terminating `;`, or the identifier
/// after `*` inside the first parentheses (function-pointer typedefs).
fn collect_typedefs(tokens: &[SourceToken]) -> HashSet<String> {
    let mut names = HashSet::new();
    let visible: Vec<&SourceToken> = tokens.iter().filter(|t| !t.directive).collect();
    let mut i = 0;
    while i < visible.len() {
        if visible[i].text != "typedef" {
            i += 1;
            continue;
        }
        let (mut brace, mut paren) = (0i32, 0i32);
        let mut last_top: Option<&str> = None;
        let mut fn_ptr: Option<&str> = None;
        let mut j = i + 1;
        while j < visible.len() {
            let t = visible[j];
            match t.text.as_str() {
                "{" => brace += 1,
                "}" => brace -= 1,
                "(" => paren += 1,
                ")" => paren -= 1,
                ";" if brace == 0 => break,
                "," if brace == 0 && paren == 0 => {
                    if let Some(n) = last_top.take() {
                        names.insert(n.to_string());
                    }
                }
                _ => {}
            }
            if t.kind == TokenKind::Identifier && brace == 0 {
                if paren == 0 {
                    last_top = Some(&t.text);
                } else if paren == 1 && fn_ptr.is_none() && j > 0 && visible[j - 1].text == "*" {
                    fn_ptr = Some(&t.text);
                }
            }
            j += 1;
        }
        if let Some(n) = last_top.or(fn_ptr) {
            names.insert(n.to_string());
        }
        i = j + 1;
    }
    names
}

const TYPE_KEYWORDS: &[&str] = &[
    "void", "char", "short", "int", "long", "float", "double", "signed", "unsigned", "_Bool",
    "_Complex", "struct", "union", "enum",
];
const QUALIFIERS: &[&str] = &[
    "const", "volatile", "restrict", "static", "extern", "register", "auto", "inline", "typedef",
    "_Atomic", "_Thread_local", "_Noreturn", "__inline", "__inline__", "__restrict", "__const",
];
const BUILTIN_TYPES: &[&str] = &["FILE", "va_list", "jmp_buf", "BOOL", "DWORD", "HANDLE"];
const ATTRIBUTE_WORDS: &[&str] = &["__attribute__", "__declspec", "__asm__", "__asm", "_Alignas"];

const ASSIGN_OPS: &[&str] = &["=", "+=", "-=", "*=", "/=", "%=", "<<=", ">>=", "&=", "^=", "|="];

fn binary_power(op: &str) -> Option<u8> {
    Some(match op {
        "||" => 4,
        "&&" => 5,
        "|" => 6,
        "^" => 7,
        "&" => 8,
        "==" | "!=" => 9,
        "<" | ">" | "<=" | ">=" => 10,
        "<<" | ">>" => 11,
        "+" | "-" => 12,
        "*" | "/" | "%" => 13,
        _ => return None,
    })
}

/// Parse failure inside a construct; the caller recovers by skipping.
struct Fail;

type PResult<T> = Result<T, Fail>;

struct Parser<'a> {
    tokens: &'a [SourceToken],
    /// Indices of non-directive tokens.
    idx: Vec<usize>,
    pos: usize,
    typedefs: HashSet<String>,
}

impl<'a> Parser<'a> {
    fn at_end(&self) -> bool {
        self.pos >= self.idx.len()
    }

    fn tok_at(&self, pos: usize) -> Option<&'a SourceToken> {
        self.idx.get(pos).map(|&i| &self.tokens[i])
    }

    fn peek(&self) -> Option<&'a SourceToken> {
        self.tok_at(self.pos)
    }

    fn peek_text_at(&self, ahead: usize) -> &'a str {
        self.tok_at(self.pos + ahead).map(|t| t.text.as_str()).unwrap_or("")
    }

    fn is(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.text == text && t.kind != TokenKind::StringLiteral)
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.is(text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, text: &str) -> PResult<()> {
        if self.eat(text) {
            Ok(())
        } else {
            Err(Fail)
        }
    }

    /// Token-index span covering visible positions `[start, end)`.
    fn range(&self, start: usize, end: usize) -> Range<usize> {
        if end <= start {
            let at = self.idx.get(start).copied().unwrap_or(self.tokens.len());
            return at..at;
        }
        self.idx[start]..self.idx[end - 1] + 1
    }

    fn tok_index(&self, pos: usize) -> usize {
        self.idx[pos]
    }

    /// Skips a balanced bracket group starting at the current `(`, `[` or `{`.
    fn skip_group(&mut self) {
        let mut depth = 0i32;
        while let Some(t) = self.peek() {
            self.pos += 1;
            if t.kind == TokenKind::Punctuation {
                match t.text.as_str() {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" | "}" => depth -= 1,
                    _ => {}
                }
            }
            if depth <= 0 {
                return;
            }
        }
    }

    /// Error recovery: skips to the end of the current statement — just past
    /// a `;` or a `{...}` group at depth zero, or before an enclosing `}`.
    fn skip_statement(&mut self) {
        while let Some(t) = self.peek() {
            match (t.kind, t.text.as_str()) {
                (TokenKind::Punctuation, ";") => {
                    self.pos += 1;
                    return;
                }
                (TokenKind::Punctuation, "}") => return,
                (TokenKind::Punctuation, "{") => {
                    self.skip_group();
                    return;
                }
                (TokenKind::Punctuation, "(" | "[") => self.skip_group(),
                _ => self.pos += 1,
            }
        }
    }

    fn is_type_name(&self, t: &SourceToken) -> bool {
        match t.kind {
            TokenKind::Keyword => TYPE_KEYWORDS.contains(&t.text.as_str()),
            TokenKind::Identifier => {
                self.typedefs.contains(&t.text) || t.text.ends_with("_t") || BUILTIN_TYPES.contains(&t.text.as_str())
            }
            _ => false,
        }
    }

    fn is_specifier_word(&self, t: &SourceToken) -> bool {
        self.is_type_name(t) || QUALIFIERS.contains(&t.text.as_str())
    }

    /// Does a declaration start at the current position?
    fn starts_declaration(&self) -> bool {
        let Some(t) = self.peek() else { return false };
        if t.kind == TokenKind::Keyword {
            return t.text != "sizeof" && self.is_specifier_word(t);
        }
        if t.kind != TokenKind::Identifier || ATTRIBUTE_WORDS.contains(&t.text.as_str()) {
            return false;
        }
        let next = self.tok_at(self.pos + 1);
        match next {
            Some(n) if n.kind == TokenKind::Identifier => true,
            Some(n) if n.text == "*" => {
                if self.is_type_name(t) {
                    return true;
                }
                // `T * name ;|=|,|[|)` cannot be an expression statement
                let mut k = self.pos + 1;
                while self.tok_at(k).is_some_and(|x| x.text == "*" || x.text == "const") {
                    k += 1;
                }
                self.tok_at(k).is_some_and(|x| x.kind == TokenKind::Identifier)
                    && matches!(self.tok_at(k + 1).map(|x| x.text.as_str()), Some(";" | "=" | "," | "[" | ")"))
            }
            _ => false,
        }
    }

    fn skip_attributes(&mut self) {
        while self.peek().is_some_and(|t| ATTRIBUTE_WORDS.contains(&t.text.as_str())) {
            self.pos += 1;
            if self.is("(") {
                self.skip_group();
            }
        }
    }

    /// Consumes declaration specifiers. Returns (any consumed, saw typedef,
    /// children for struct/union/enum bodies).
    fn specifiers(&mut self) -> (bool, bool, Vec<AstNode>) {
        let (mut any, mut is_typedef, mut saw_type) = (false, false, false);
        let mut children = Vec::new();
        loop {
            self.skip_attributes();
            let Some(t) = self.peek() else { break };
            if t.kind == TokenKind::Keyword && matches!(t.text.as_str(), "struct" | "union" | "enum") {
                self.pos += 1;
                self.skip_attributes();
                if self.peek().is_some_and(|t| t.kind == TokenKind::Identifier) {
                    self.pos += 1;
                }
                if self.is("{") {
                    let start = self.pos;
                    self.skip_group();
                    children.push(AstNode::leaf(NodeKind::Other, self.range(start, self.pos)));
                }
                any = true;
                saw_type = true;
                continue;
            }
            if t.kind == TokenKind::Keyword && (TYPE_KEYWORDS.contains(&t.text.as_str()) || QUALIFIERS.contains(&t.text.as_str())) {
                is_typedef |= t.text == "typedef";
                saw_type |= TYPE_KEYWORDS.contains(&t.text.as_str());
                self.pos += 1;
                any = true;
                continue;
            }
            if t.kind == TokenKind::Identifier && !saw_type {
                // a typedef name is a specifier when a declarator follows it
                let next = self.peek_text_at(1);
                let next_tok = self.tok_at(self.pos + 1);
                let declarator_follows = next == "*"
                    || next_tok.is_some_and(|n| n.kind == TokenKind::Identifier)
                    || (next == "(" && self.is_type_name(t));
                if declarator_follows {
                    self.pos += 1;
                    any = true;
                    saw_type = true;
                    continue;
                }
            }
            break;
        }
        (any, is_typedef, children)
    }

    /// Parses one declarator. Returns (name position, is plain function
    /// declarator, children from array bounds).
    fn declarator(&mut self) -> PResult<(Option<usize>, bool, Vec<AstNode>)> {
        let mut children = Vec::new();
        while self.is("*") || self.peek().is_some_and(|t| QUALIFIERS.contains(&t.text.as_str())) {
            self.pos += 1;
        }
        self.skip_attributes();
        let mut name = None;
        let mut plain = false;
        if self.peek().is_some_and(|t| t.kind == TokenKind::Identifier) {
            name = Some(self.pos);
            plain = true;
            self.pos += 1;
        } else if self.is("(") && !self.looks_like_parameters() {
            self.pos += 1;
            let (inner, _, inner_children) = self.declarator()?;
            children.extend(inner_children);
            self.expect(")")?;
            name = inner;
        }
        let mut function = false;
        loop {
            if self.is("[") {
                self.pos += 1;
                if !self.is("]") {
                    children.push(self.expression(0)?);
                }
                self.expect("]")?;
            } else if self.is("(") {
                function |= plain;
                self.skip_group();
            } else {
                break;
            }
        }
        self.skip_attributes();
        Ok((name, function, children))
    }

    /// `(` opening a parameter list rather than a parenthesized declarator.
    fn looks_like_parameters(&self) -> bool {
        let next = self.tok_at(self.pos + 1);
        match next {
            Some(t) if t.text == ")" => true,
            Some(t) => self.is_specifier_word(t) && t.text != "*",
            None => false,
        }
    }

    fn initializer(&mut self) -> PResult<AstNode> {
        if self.is("{") {
            self.brace_list()
        } else {
            self.expression(2)
        }
    }

    fn brace_list(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        self.expect("{")?;
        let mut children = Vec::new();
        while !self.is("}") {
            // designators: .field = / [index] =
            loop {
                if self.is(".") && self.tok_at(self.pos + 1).is_some_and(|t| t.kind == TokenKind::Identifier) {
                    self.pos += 2;
                } else if self.is("[") {
                    self.skip_group();
                } else {
                    break;
                }
            }
            self.eat("=");
            children.push(self.initializer()?);
            if !self.eat(",") {
                break;
            }
        }
        self.expect("}")?;
        Ok(AstNode::other(self.range(start, self.pos), children))
    }

    /// A declaration ending in `;`, starting at the current position.
    /// Produces an `Other` node whose children are one `VarDeclaration`
    /// per variable declarator.
    fn declaration(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        let (_, is_typedef, mut children) = self.specifiers();
        if !self.is(";") {
            loop {
                let dstart = self.pos;
                let (name, function, bounds) = self.declarator()?;
                let split = self.pos;
                let mut decl_children = bounds;
                if self.eat("=") {
                    decl_children.push(self.initializer()?);
                }
                if let (Some(name_pos), false, false) = (name, function, is_typedef) {
                    let tok = self.tok_index(name_pos);
                    children.push(AstNode {
                        kind: NodeKind::VarDeclaration,
                        span: self.range(dstart, self.pos),
                        name: Some(self.tokens[tok].text.clone()),
                        name_token: Some(tok),
                        children: decl_children,
                        split: Some(self.idx.get(split).copied().unwrap_or(self.tokens.len())),
                    });
                } else {
                    children.extend(decl_children);
                }
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(";")?;
        Ok(AstNode::other(self.range(start, self.pos), children))
    }

    fn external_declaration(&mut self) -> Option<AstNode> {
        if self.eat(";") {
            return None;
        }
        let start = self.pos;
        match self.function_or_declaration() {
            Ok(node) => Some(node),
            Err(Fail) => {
                self.pos = start;
                self.skip_statement();
                Some(AstNode::other(self.range(start, self.pos), Vec::new()))
            }
        }
    }

    fn function_or_declaration(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        let (any_specifier, is_typedef, spec_children) = self.specifiers();
        if !any_specifier {
            // file-scope snippets without a type are read as expression
            // statements (`p = buf;`, macro invocations)
            self.pos = start;
            if let Ok(expr) = self.expression(0) {
                if self.eat(";") {
                    return Ok(AstNode::other(self.range(start, self.pos), vec![expr]));
                }
            }
            self.pos = start;
            self.specifiers();
        }
        if !is_typedef && !self.is(";") {
            let before = self.pos;
            let (name, function, _) = self.declarator()?;
            // K&R parameter declarations may sit between `)` and `{`
            while function && !self.is("{") && self.starts_declaration() {
                self.declaration()?;
            }
            if function && self.is("{") {
                let body = self.compound()?;
                let tok = name.map(|n| self.tok_index(n));
                let mut children = spec_children;
                children.push(body);
                return Ok(AstNode {
                    kind: NodeKind::FunctionDef,
                    span: self.range(start, self.pos),
                    name: tok.map(|t| self.tokens[t].text.clone()),
                    name_token: tok,
                    children,
                    split: None,
                });
            }
            self.pos = before;
        }
        self.pos = start;
        self.declaration()
    }

    fn compound(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        self.expect("{")?;
        let mut children = Vec::new();
        while !self.is("}") && !self.at_end() {
            let before = self.pos;
            if let Some(node) = self.statement() {
                children.push(node);
            }
            if self.pos == before {
                self.pos += 1;
            }
        }
        self.expect("}")?;
        Ok(AstNode::other(self.range(start, self.pos), children))
    }

    /// Parses one statement with recovery; returns `None` for empty ones.
    fn statement(&mut self) -> Option<AstNode> {
        if self.eat(";") {
            return None;
        }
        let start = self.pos;
        match self.statement_inner() {
            Ok(node) => Some(node),
            Err(Fail) => {
                self.pos = start;
                self.skip_statement();
                if self.pos == start {
                    return None;
                }
                Some(AstNode::other(self.range(start, self.pos), Vec::new()))
            }
        }
    }

    fn sub_statement(&mut self) -> Vec<AstNode> {
        self.statement().into_iter().collect()
    }

    fn paren_expression(&mut self) -> PResult<AstNode> {
        self.expect("(")?;
        let e = self.expression(0)?;
        self.expect(")")?;
        Ok(e)
    }

    fn statement_inner(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        let t = self.peek().ok_or(Fail)?;
        let text = t.text.as_str();
        let is_kw = t.kind == TokenKind::Keyword;
        let mut children = Vec::new();
        match (is_kw, text) {
            (false, "{") => return self.compound(),
            (true, "if") => {
                self.pos += 1;
                children.push(self.paren_expression()?);
                children.extend(self.sub_statement());
                if self.eat("else") {
                    children.extend(self.sub_statement());
                }
            }
            (true, "while" | "switch") => {
                self.pos += 1;
                children.push(self.paren_expression()?);
                children.extend(self.sub_statement());
            }
            (true, "do") => {
                self.pos += 1;
                children.extend(self.sub_statement());
                self.expect("while")?;
                children.push(self.paren_expression()?);
                self.expect(";")?;
            }
            (true, "for") => {
                self.pos += 1;
                self.expect("(")?;
                if self.starts_declaration() {
                    children.push(self.declaration()?);
                } else {
                    if !self.is(";") {
                        children.push(self.expression(0)?);
                    }
                    self.expect(";")?;
                }
                if !self.is(";") {
                    children.push(self.expression(0)?);
                }
                self.expect(";")?;
                if !self.is(")") {
                    children.push(self.expression(0)?);
                }
                self.expect(")")?;
                children.extend(self.sub_statement());
            }
            (true, "return") => {
                self.pos += 1;
                if !self.is(";") {
                    children.push(self.expression(0)?);
                }
                self.expect(";")?;
            }
            (true, "break" | "continue") => {
                self.pos += 1;
                self.expect(";")?;
            }
            (true, "goto") => {
                self.pos += 2;
                self.expect(";")?;
            }
            (true, "case") => {
                self.pos += 1;
                children.push(self.expression(3)?);
                self.expect(":")?;
            }
            (true, "default") => {
                self.pos += 1;
                self.expect(":")?;
            }
            _ if t.kind == TokenKind::Identifier && self.peek_text_at(1) == ":" => {
                self.pos += 2;
            }
            _ if self.starts_declaration() => return self.declaration(),
            _ => {
                children.push(self.expression(0)?);
                self.expect(";")?;
            }
        }
        Ok(AstNode::other(self.range(start, self.pos), children))
    }

    /// Pratt expression parser. `min` is the minimum binding power:
    /// 0 admits the comma operator, 2 a full assignment expression,
    /// 3 a conditional expression.
    fn expression(&mut self, min: u8) -> PResult<AstNode> {
        let start = self.pos;
        let mut lhs = self.unary()?;
        while let Some(t) = self.peek() {
            if t.kind != TokenKind::Operator && t.kind != TokenKind::Punctuation {
                break;
            }
            let op = t.text.as_str();
            if op == "," && min == 0 {
                self.pos += 1;
                let rhs = self.expression(2)?;
                lhs = AstNode::other(self.range(start, self.pos), vec![lhs, rhs]);
            } else if ASSIGN_OPS.contains(&op) && min <= 2 {
                let op_tok = self.tok_index(self.pos);
                self.pos += 1;
                let rhs = self.expression(2)?;
                lhs = AstNode {
                    kind: NodeKind::AssignmentExpr,
                    span: self.range(start, self.pos),
                    name: None,
                    name_token: None,
                    children: vec![lhs, rhs],
                    split: Some(op_tok),
                };
            } else if op == "?" && min <= 3 {
                self.pos += 1;
                let then = self.expression(0)?;
                self.expect(":")?;
                let otherwise = self.expression(3)?;
                lhs = AstNode::other(self.range(start, self.pos), vec![lhs, then, otherwise]);
            } else if let Some(bp) = binary_power(op).filter(|&bp| bp >= min.max(4)) {
                self.pos += 1;
                let rhs = self.expression(bp + 1)?;
                lhs = AstNode::other(self.range(start, self.pos), vec![lhs, rhs]);
            } else {
                break;
            }
        }
        Ok(lhs)
    }

    /// `( type-name )` at the current position: returns the position after `)`.
    fn type_name_in_parens(&self) -> Option<usize> {
        if !self.is("(") {
            return None;
        }
        let first = self.tok_at(self.pos + 1)?;
        let mut k = self.pos + 1;
        let typeish = self.is_specifier_word(first)
            || (first.kind == TokenKind::Identifier && {
                // `(Name *)` or `(Name **)` casts to unknown typedefs
                let mut j = k + 1;
                let mut stars = 0;
                while self.tok_at(j).is_some_and(|t| t.text == "*") {
                    j += 1;
                    stars += 1;
                }
                stars > 0 && self.tok_at(j).is_some_and(|t| t.text == ")")
            });
        if !typeish {
            return None;
        }
        let mut depth = 0i32;
        while let Some(t) = self.tok_at(k) {
            match t.text.as_str() {
                "(" | "[" => depth += 1,
                ")" if depth == 0 => return Some(k + 1),
                ")" | "]" => depth -= 1,
                ";" | "{" | "}" => return None,
                _ => {}
            }
            k += 1;
        }
        None
    }

    fn unary(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        let t = self.peek().ok_or(Fail)?;
        match t.text.as_str() {
            "++" | "--" | "+" | "-" | "!" | "~" | "*" | "&" if t.kind == TokenKind::Operator => {
                self.pos += 1;
                let operand = self.unary()?;
                return Ok(AstNode::other(self.range(start, self.pos), vec![operand]));
            }
            "sizeof" | "_Alignof" | "__alignof__" => {
                self.pos += 1;
                if let Some(after) = self.type_name_in_parens() {
                    self.pos = after;
                    return Ok(AstNode::leaf(NodeKind::Other, self.range(start, self.pos)));
                }
                let operand = self.unary()?;
                return Ok(AstNode::other(self.range(start, self.pos), vec![operand]));
            }
            "(" => {
                if let Some(after) = self.type_name_in_parens() {
                    self.pos = after;
                    if self.is("{") {
                        let list = self.brace_list()?;
                        let node = AstNode::other(self.range(start, self.pos), vec![list]);
                        return self.postfix(node, start);
                    }
                    let operand = self.unary()?;
                    return Ok(AstNode::other(self.range(start, self.pos), vec![operand]));
                }
            }
            _ => {}
        }
        let primary = self.primary()?;
        self.postfix(primary, start)
    }

    fn primary(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        let t = self.peek().ok_or(Fail)?;
        match t.kind {
            TokenKind::Identifier => {
                self.pos += 1;
                let tok = self.tok_index(start);
                Ok(AstNode {
                    kind: NodeKind::DeclRefExpr,
                    span: self.range(start, self.pos),
                    name: Some(t.text.clone()),
                    name_token: Some(tok),
                    children: Vec::new(),
                    split: None,
                })
            }
            TokenKind::Constant => {
                self.pos += 1;
                Ok(AstNode::leaf(NodeKind::Other, self.range(start, self.pos)))
            }
            TokenKind::StringLiteral => {
                while self.peek().is_some_and(|t| t.kind == TokenKind::StringLiteral) {
                    self.pos += 1;
                }
                Ok(AstNode::leaf(NodeKind::Other, self.range(start, self.pos)))
            }
            TokenKind::Punctuation if t.text == "(" => {
                self.pos += 1;
                let inner = if self.is("{") {
                    // GNU statement expression
                    self.compound()?
                } else {
                    self.expression(0)?
                };
                self.expect(")")?;
                Ok(AstNode::other(self.range(start, self.pos), vec![inner]))
            }
            _ => Err(Fail),
        }
    }

    fn postfix(&mut self, mut node: AstNode, start: usize) -> PResult<AstNode> {
        while let Some(t) = self.peek() {
            match t.text.as_str() {
                "(" if t.kind == TokenKind::Punctuation => {
                    let open = self.tok_index(self.pos);
                    self.pos += 1;
                    let mut children = Vec::new();
                    let (name, name_token) = if node.kind == NodeKind::DeclRefExpr {
                        (node.name.take(), node.name_token)
                    } else {
                        children.push(node);
                        (None, None)
                    };
                    while !self.is(")") {
                        children.push(self.expression(2)?);
                        if !self.eat(",") {
                            break;
                        }
                    }
                    self.expect(")")?;
                    node = AstNode {
                        kind: NodeKind::CallExpr,
                        span: self.range(start, self.pos),
                        name,
                        name_token,
                        children,
                        split: Some(open),
                    };
                }
                "[" if t.kind == TokenKind::Punctuation => {
                    self.pos += 1;
                    let index = self.expression(0)?;
                    self.expect("]")?;
                    node = AstNode::other(self.range(start, self.pos), vec![node, index]);
                }
                "." | "->" => {
                    self.pos += 1;
                    if !self.peek().is_some_and(|t| t.kind == TokenKind::Identifier) {
                        return Err(Fail);
                    }
                    self.pos += 1;
                    node = AstNode::other(self.range(start, self.pos), vec![node]);
                }
                "++" | "--" => {
                    self.pos += 1;
                    node = AstNode::other(self.range(start, self.pos), vec![node]);
                }
                _ => break,
            }
        }
        Ok(node)
    }
}

#[cfg(test)]
mod tests {
    use super::super::lexer::tokenize_c;
    use super::*;
    use crate::FileId;

    fn parse(src: &str) -> (Vec<SourceToken>, AstNode) {
        let toks = tokenize_c(src, &FileId::new("t.c")).unwrap();
        let root = parse_c_unit(&toks).unwrap();
        (toks, root)
    }

    fn collect(root: &AstNode, kind: NodeKind) -> Vec<AstNode> {
        let mut out = Vec::new();
        root.walk(&mut |n| {
            if n.kind == kind {
                out.push(n.clone());
            }
        });
        out
    }

    fn check_spans(n: &AstNode) {
        let mut prev_end = n.span.start;
        for c in &n.children {
            assert!(c.span.start >= n.span.start && c.span.end <= n.span.end, "{c:?} escapes {:?}", n.span);
            assert!(c.span.start >= prev_end, "siblings overlap under {:?}", n.span);
            prev_end = c.span.end;
            check_spans(c);
        }
    }

    #[test]
    fn single_declaration() {
        let (_, root) = parse("int x;");
        let decls = collect(&root, NodeKind::VarDeclaration);
        assert_eq!(decls.len(), 1);
        assert_eq!(decls[0].name.as_deref(), Some("x"));
    }

    #[test]
    fn nested_call_is_child_of_call() {
        let (_, root) = parse("void h(void) { f(g(a)); }");
        let calls = collect(&root, NodeKind::CallExpr);
        assert_eq!(calls.len(), 2);
        assert_eq!(calls[0].name.as_deref(), Some("f"));
        assert_eq!(calls[0].call_arguments()[0].kind, NodeKind::CallExpr);
        assert_eq!(calls[0].call_arguments()[0].name.as_deref(), Some("g"));
        check_spans(&root);
    }

    #[test]
    fn function_definitions_and_prototypes() {
        let (_, root) = parse("static int f(int a, char *b);\nint main(void) { return f(1, 0); }\n");
        let defs = collect(&root, NodeKind::FunctionDef);
        assert_eq!(defs.len(), 1);
        assert_eq!(defs[0].name.as_deref(), Some("main"));
        assert!(collect(&root, NodeKind::VarDeclaration).is_empty());
    }

    #[test]
    fn declarators_and_initializers() {
        let (toks, root) = parse("void f() { char *p = a * b, buf[N + 1], (*fp)(int); size_t n = sizeof(int); }");
        let decls = collect(&root, NodeKind::VarDeclaration);
        let names: Vec<_> = decls.iter().map(|d| d.name.clone().unwrap()).collect();
        assert_eq!(names, ["p", "buf", "fp", "n"]);
        let declarator: Vec<_> = (decls[0].span.start..decls[0].split.unwrap()).map(|i| toks[i].text.as_str()).collect();
        assert_eq!(declarator, ["*", "p"]);
        check_spans(&root);
    }

    #[test]
    fn typedef_names_are_types_not_variables() {
        let (_, root) = parse("typedef struct { int a; } pair;\npair *mk(void);\nvoid g() { pair *q; pair r; }");
        let names: Vec<_> = collect(&root, NodeKind::VarDeclaration).into_iter().map(|d| d.name.unwrap()).collect();
        assert_eq!(names, ["q", "r"]);
    }

    #[test]
    fn casts_and_compound_assignments() {
        let (_, root) = parse("void g() { p = (char *)malloc(n); x += y; s.len = (int)strlen(s.buf); }");
        let assigns = collect(&root, NodeKind::AssignmentExpr);
        assert_eq!(assigns.len(), 3);
        let calls: Vec<_> = collect(&root, NodeKind::CallExpr).into_iter().map(|c| c.name.unwrap()).collect();
        assert_eq!(calls, ["malloc", "strlen"]);
        check_spans(&root);
    }

    #[test]
    fn control_statements_parse() {
        let src = "int f(int n) {\n for (int i = 0; i < n; i++) { if (i % 2) continue; else n--; }\n while (n > 0) n -= 2;\n do { n++; } while (n < 3);\n switch (n) { case 1: n = 2; break; default: ; }\n out: return n;\n}\n";
        let (_, root) = parse(src);
        assert_eq!(collect(&root, NodeKind::FunctionDef).len(), 1);
        assert_eq!(collect(&root, NodeKind::AssignmentExpr).len(), 2);
        assert_eq!(collect(&root, NodeKind::VarDeclaration).len(), 1);
        check_spans(&root);
    }

    #[test]
    fn unbalanced_input_is_rejected_with_location() {
        let toks = tokenize_c("int f() {\n  g(1;\n}\n", &FileId::new("u.c")).unwrap();
        match parse_c_unit(&toks) {
            Err(FrontendError::Parse { line, .. }) => assert!(line == 2 || line == 3),
            other => panic!("{other:?}"),
        }
        let toks = tokenize_c("int f() {\n", &FileId::new("u.c")).unwrap();
        assert!(matches!(parse_c_unit(&toks), Err(FrontendError::Parse { line: 1, .. })));
    }

    #[test]
    fn garbage_becomes_other_nodes() {
        let (_, root) = parse("FOO(bar) BAZ; int ok; void f() { @@ ; x = y; }");
        assert_eq!(collect(&root, NodeKind::VarDeclaration).len(), 1);
        assert_eq!(collect(&root, NodeKind::AssignmentExpr).len(), 1);
        check_spans(&root);
    }
}
