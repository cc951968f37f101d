use std::collections::{BTreeSet, HashSet};

use super::lexer::{comment_start, tokenize_line, IrToken, IrTokenKind};
use super::metadata::MetadataTable;
use super::{InstKind, IrError, IrFunction, IrGlobal, IrModule, IrParam, IrStatement, Operand, Value};
use crate::FileId;

const TYPE_WORDS: &[&str] = &[
    "void", "half", "bfloat", "float", "double", "x86_fp80", "fp128", "ppc_fp128", "ptr", "token", "x86_mmx", "opaque",
];
const CONST_WORDS: &[&str] = &["true", "false", "null", "undef", "poison", "zeroinitializer", "none"];
const CONST_EXPR_OPS: &[&str] = &[
    "getelementptr", "bitcast", "ptrtoint", "inttoptr", "addrspacecast", "trunc", "zext", "sext", "select", "add",
    "sub", "mul", "and", "or", "xor", "shl", "lshr", "ashr", "icmp", "fcmp", "extractvalue",
];
const CAST_OPS: &[&str] = &[
    "zext", "sext", "trunc", "bitcast", "ptrtoint", "inttoptr", "fpext", "fptrunc", "sitofp", "uitofp", "fptosi",
    "fptoui", "addrspacecast", "freeze",
];

fn is_type_word(w: &str) -> bool {
    TYPE_WORDS.contains(&w) || (w.len() > 1 && w.starts_with('i') && w[1..].chars().all(|c| c.is_ascii_digit()))
}

/// Parses a textual LLVM module.
pub fn parse_ll(text: &str, file: impl Into<FileId>) -> Result<IrModule, IrError> {
    let file = file.into();
    let lines: Vec<&str> = text.lines().collect();
    let err = |line: usize, message: String| IrError::Parse { file: file.clone(), line, message };

    // first pass: metadata nodes and named types
    let mut meta = MetadataTable::default();
    let mut types = HashSet::new();
    for line in &lines {
        let t = line.trim_start();
        if t.starts_with('!') {
            meta.add_line(t);
        } else if t.starts_with('%') {
            if let Ok(tokens) = tokenize_line(t) {
                if tokens.len() >= 3 && tokens[1].is("=") && tokens[2].is("type") {
                    types.insert(tokens[0].name().to_string());
                }
            }
        }
    }

    let mut module = IrModule {
        file: file.clone(),
        source_filename: None,
        functions: Vec::new(),
        globals: Vec::new(),
        declared_externals: BTreeSet::new(),
    };
    let mut i = 0;
    while i < lines.len() {
        let lineno = i + 1;
        let line = lines[i].trim();
        i += 1;
        if line.is_empty() || line.starts_with(';') || line.starts_with('!') || line.starts_with("attributes ") {
            continue;
        }
        let tokens = tokenize_line(line).map_err(|m| err(lineno, m))?;
        let Some(first) = tokens.first() else { continue };
        if first.is("source_filename") {
            module.source_filename = tokens.iter().find(|t| t.kind == IrTokenKind::Str).map(|t| unquote(&t.text).to_string());
        } else if first.is("define") {
            let mut function = parse_header(line, &tokens, true).map_err(|m| err(lineno, m))?;
            // body lines up to the closing brace
            let mut raw: Vec<(usize, String)> = Vec::new();
            let mut pending: Option<(usize, String, i32)> = None;
            let mut closed = false;
            while i < lines.len() {
                let body_line = lines[i];
                let no = i + 1;
                i += 1;
                let trimmed = body_line.trim();
                if pending.is_none() && trimmed == "}" {
                    closed = true;
                    break;
                }
                if pending.is_none() && (trimmed.is_empty() || trimmed.starts_with(';')) {
                    continue;
                }
                let code = &trimmed[..comment_start(trimmed).unwrap_or(trimmed.len())];
                let delta = bracket_delta(code);
                match pending.take() {
                    Some((start, mut text, depth)) => {
                        text.push('\n');
                        text.push_str(trimmed);
                        if depth + delta > 0 {
                            pending = Some((start, text, depth + delta));
                        } else {
                            raw.push((start, text));
                        }
                    }
                    None if delta > 0 => pending = Some((no, trimmed.to_string(), delta)),
                    None => raw.push((no, trimmed.to_string())),
                }
            }
            if !closed || pending.is_some() {
                return Err(err(lineno, format!("function @{} has no closing brace", function.name)));
            }
            for (no, text) in raw {
                let stmt = parse_statement(&text, no, &types, &meta).map_err(|m| err(no, m))?;
                function.statements.push(stmt);
            }
            validate_ssa(&mut function).map_err(|(no, m)| err(no.unwrap_or(lineno), m))?;
            if module.functions.iter().any(|f| f.name == function.name && f.is_definition) {
                return Err(err(lineno, format!("function @{} defined twice", function.name)));
            }
            module.functions.push(function);
        } else if first.is("declare") {
            let function = parse_header(line, &tokens, false).map_err(|m| err(lineno, m))?;
            module.declared_externals.insert(function.name.clone());
            module.functions.push(function);
        } else if first.kind == IrTokenKind::Global && tokens.get(1).is_some_and(|t| t.is("=")) {
            module.globals.push(parse_global(line, &tokens, &meta));
        }
        // target, attributes, comdats, named types: nothing to keep
    }
    // a definition supersedes a declaration of the same name
    let defined: HashSet<String> = module.functions.iter().filter(|f| f.is_definition).map(|f| f.name.clone()).collect();
    module.declared_externals.retain(|n| !defined.contains(n));
    module.functions.retain(|f| f.is_definition || !defined.contains(&f.name));
    Ok(module)
}

fn unquote(s: &str) -> &str {
    s.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(s)
}

fn bracket_delta(code: &str) -> i32 {
    let Ok(tokens) = tokenize_line(code) else { return 0 };
    tokens
        .iter()
        .filter(|t| t.kind == IrTokenKind::Punct)
        .map(|t| match t.text.as_str() {
            "[" | "(" => 1,
            "]" | ")" => -1,
            _ => 0,
        })
        .sum()
}

fn parse_header(line: &str, tokens: &[IrToken], definition: bool) -> Result<IrFunction, String> {
    let name_pos = (0..tokens.len())
        .find(|&i| tokens[i].kind == IrTokenKind::Global && tokens.get(i + 1).is_some_and(|n| n.is("(")))
        .ok_or("function header without a name")?;
    let internal = tokens[..name_pos].iter().any(|t| t.is("internal") || t.is("private"));
    let mut params = Vec::new();
    let groups = split_group(tokens, name_pos + 1).ok_or("unbalanced parameter list")?;
    for group in groups.0 {
        if group.is_empty() || (group.len() == 1 && group[0].is("...")) {
            continue;
        }
        let local = group.iter().rposition(|t| t.kind == IrTokenKind::Local);
        let (name, ty_end) = match local {
            Some(p) => (group[p].name().to_string(), p),
            None => (String::new(), group.len()),
        };
        let ty = match (group.first(), ty_end.checked_sub(1).and_then(|e| group.get(e))) {
            (Some(a), Some(b)) if ty_end > 0 => line[a.span.start..b.span.end].to_string(),
            _ => String::new(),
        };
        params.push(IrParam { name, ty });
    }
    Ok(IrFunction {
        name: tokens[name_pos].name().to_string(),
        params,
        statements: Vec::new(),
        is_definition: definition,
        internal,
        header: line.to_string(),
        entry_label: String::new(),
    })
}

/// Given the index of an opening `(`, `[` or `{`, splits its contents at
/// top-level commas. Returns the groups and the index of the closing token.
fn split_group(tokens: &[IrToken], open: usize) -> Option<(Vec<&[IrToken]>, usize)> {
    let mut depth = 0i32;
    let mut groups = Vec::new();
    let mut start = open + 1;
    for (i, t) in tokens.iter().enumerate().skip(open) {
        if t.kind != IrTokenKind::Punct {
            continue;
        }
        match t.text.as_str() {
            "(" | "[" | "{" | "<" => depth += 1,
            ")" | "]" | "}" | ">" => {
                depth -= 1;
                if depth == 0 {
                    groups.push(&tokens[start..i]);
                    return Some((groups, i));
                }
            }
            "," if depth == 1 => {
                groups.push(&tokens[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    None
}

/// Splits a token list at depth-zero commas.
fn split_top(tokens: &[IrToken]) -> Vec<&[IrToken]> {
    let mut depth = 0i32;
    let mut out = Vec::new();
    let mut start = 0;
    for (i, t) in tokens.iter().enumerate() {
        if t.kind != IrTokenKind::Punct {
            continue;
        }
        match t.text.as_str() {
            "(" | "[" | "{" | "<" => depth += 1,
            ")" | "]" | "}" | ">" => depth -= 1,
            "," if depth == 0 => {
                out.push(&tokens[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&tokens[start..]);
    out
}

/// The value designated by one comma-separated operand (type and
/// attributes included).
fn value_of(tokens: &[IrToken], types: &HashSet<String>) -> Value {
    for (i, t) in tokens.iter().enumerate() {
        if t.kind == IrTokenKind::Word && CONST_EXPR_OPS.contains(&t.text.as_str()) {
            let paren = tokens[i + 1..].iter().position(|x| x.is("("));
            if paren.is_some() {
                let base = tokens[i + 1..].iter().find(|x| x.kind == IrTokenKind::Global).map(|g| g.name().to_string());
                return Value::ConstExpr { base };
            }
        }
    }
    let named = tokens.iter().rev().find(|t| {
        t.kind == IrTokenKind::Global || (t.kind == IrTokenKind::Local && !types.contains(t.name()))
    });
    if let Some(t) = named {
        return if t.kind == IrTokenKind::Global { Value::Global(t.name().into()) } else { Value::Local(t.name().into()) };
    }
    let constant = tokens.iter().rev().find(|t| {
        matches!(t.kind, IrTokenKind::Number | IrTokenKind::Str | IrTokenKind::CStr)
            || (t.kind == IrTokenKind::Word && CONST_WORDS.contains(&t.text.as_str()))
    });
    Value::Const(constant.map(|t| t.text.clone()).unwrap_or_default())
}

fn classify_operands(tokens: &[IrToken], types: &HashSet<String>, line: &str) -> Vec<Operand> {
    let mut out: Vec<Operand> = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let t = &tokens[i];
        match t.kind {
            IrTokenKind::Word if t.text == "label" && tokens.get(i + 1).is_some_and(|n| n.kind == IrTokenKind::Local) => {
                out.push(Operand::Label(tokens[i + 1].name().to_string()));
                i += 2;
                continue;
            }
            IrTokenKind::Word if is_type_word(&t.text) => out.push(Operand::Type(t.text.clone())),
            IrTokenKind::Word if CONST_WORDS.contains(&t.text.as_str()) => out.push(Operand::Const(t.text.clone())),
            IrTokenKind::Word => out.push(Operand::Keyword(t.text.clone())),
            IrTokenKind::Local if types.contains(t.name()) => out.push(Operand::Type(t.text.clone())),
            IrTokenKind::Local => out.push(Operand::Local(t.name().to_string())),
            IrTokenKind::Global => out.push(Operand::Global(t.name().to_string())),
            IrTokenKind::Number | IrTokenKind::Str | IrTokenKind::CStr => out.push(Operand::Const(t.text.clone())),
            IrTokenKind::Meta => {}
            IrTokenKind::Punct => {
                let opens_aggregate_type = (t.text == "[" || t.text == "<")
                    && tokens.get(i + 1).is_some_and(|n| n.kind == IrTokenKind::Number)
                    && tokens.get(i + 2).is_some_and(|n| n.is("x"));
                if opens_aggregate_type {
                    if let Some((_, close)) = split_group(tokens, i) {
                        out.push(Operand::Type(line[t.span.start..tokens[close].span.end].to_string()));
                        i = close + 1;
                        continue;
                    }
                }
                if t.text == "*" {
                    if let Some(Operand::Type(ty)) = out.last_mut() {
                        ty.push('*');
                    }
                }
            }
        }
        i += 1;
    }
    out
}

fn parse_statement(text: &str, ll_line: usize, types: &HashSet<String>, meta: &MetadataTable) -> Result<IrStatement, String> {
    // comments are per physical line
    let code: String = text.lines().map(|l| &l[..comment_start(l).unwrap_or(l.len())]).collect::<Vec<_>>().join(" ");
    let mut tokens = tokenize_line(&code)?;
    let raw = text.to_string();

    // block label
    if tokens.len() == 2 && tokens[1].is(":") && matches!(tokens[0].kind, IrTokenKind::Number | IrTokenKind::Word | IrTokenKind::Str) {
        return Ok(IrStatement {
            result: Some(unquote(&tokens[0].text).to_string()),
            opcode: "label".into(),
            operands: Vec::new(),
            kind: InstKind::Label,
            debug: None,
            raw,
            ll_line,
        });
    }

    // trailing metadata attachments: `, !name !N`
    let mut debug = None;
    let mut depth = 0i32;
    let mut cut = None;
    for (i, t) in tokens.iter().enumerate() {
        if t.kind == IrTokenKind::Punct {
            match t.text.as_str() {
                "(" | "[" | "{" | "<" => depth += 1,
                ")" | "]" | "}" | ">" => depth -= 1,
                "," if depth == 0 && tokens.get(i + 1).is_some_and(|n| n.kind == IrTokenKind::Meta) => {
                    cut.get_or_insert(i);
                    if tokens[i + 1].text == "!dbg" {
                        if let Some(node) = tokens.get(i + 2) {
                            debug = meta.location(&node.text);
                        }
                    }
                }
                _ => {}
            }
        }
    }
    if let Some(c) = cut {
        tokens.truncate(c);
    }

    let mut pos = 0;
    let mut result = None;
    if tokens.len() >= 2 && tokens[0].kind == IrTokenKind::Local && tokens[1].is("=") {
        result = Some(tokens[0].name().to_string());
        pos = 2;
    }
    while tokens.get(pos).is_some_and(|t| t.is("tail") || t.is("musttail") || t.is("notail")) {
        pos += 1;
    }
    let opcode = tokens.get(pos).filter(|t| t.kind == IrTokenKind::Word).ok_or("missing opcode")?.text.clone();
    let rest = &tokens[pos + 1..];
    let mut operands = classify_operands(rest, types, &code);
    let args = split_top(rest);
    let arg_value = |k: usize| args.get(k).map(|a| value_of(a, types)).unwrap_or(Value::Const(String::new()));

    let kind = match opcode.as_str() {
        "alloca" => InstKind::Alloca,
        "load" => InstKind::Load { ptr: arg_value(1) },
        "store" => InstKind::Store { value: arg_value(0), ptr: arg_value(1) },
        "getelementptr" => InstKind::Gep { base: arg_value(1) },
        op if CAST_OPS.contains(&op) => {
            let to = rest.iter().position(|t| t.is("to")).unwrap_or(rest.len());
            InstKind::Cast { src: value_of(&rest[..to], types) }
        }
        "call" | "invoke" => {
            let callee_pos = rest.iter().enumerate().position(|(i, t)| {
                matches!(t.kind, IrTokenKind::Global | IrTokenKind::Local)
                    && !types.contains(t.name())
                    && rest.get(i + 1).is_some_and(|n| n.is("("))
            });
            let (callee, call_args) = match callee_pos {
                Some(p) => {
                    let callee = (rest[p].kind == IrTokenKind::Global).then(|| rest[p].name().to_string());
                    let groups = split_group(rest, p + 1).map(|g| g.0).unwrap_or_default();
                    let values: Vec<Value> = groups.iter().filter(|g| !g.is_empty()).map(|g| value_of(g, types)).collect();
                    (callee, (groups, values))
                }
                None => (None, (Vec::new(), Vec::new())),
            };
            match callee.as_deref() {
                Some(name) if name.starts_with("llvm.dbg.") => {
                    let (groups, values) = call_args;
                    let var = groups.get(1).and_then(|g| g.iter().find(|t| t.kind == IrTokenKind::Meta && t.text.len() > 1));
                    let (var_name, var_line) = match var.and_then(|v| meta.variable(&v.text)) {
                        Some((name, loc)) => (Some(name), loc.map(|l| l.line)),
                        None => (None, None),
                    };
                    InstKind::DbgIntrinsic { value: values.first().and_then(|v| v.local()).map(String::from), var_name, var_line }
                }
                _ => InstKind::Call { callee, args: call_args.1 },
            }
        }
        "br" | "indirectbr" => {
            let targets = label_targets(&operands);
            let cond = if opcode == "indirectbr" || args.len() == 3 { Some(arg_value(0)) } else { None };
            InstKind::Br { cond, targets }
        }
        "switch" => InstKind::Switch { cond: arg_value(0), targets: label_targets(&operands) },
        "ret" => {
            let void = rest.first().map_or(true, |t| t.is("void"));
            InstKind::Ret { value: (!void).then(|| arg_value(0)) }
        }
        "phi" => {
            let mut incoming = Vec::new();
            let mut ty = Vec::new();
            for group in &args {
                if let Some(open) = group.iter().position(|t| t.is("[")) {
                    ty.extend(classify_operands(&group[..open], types, &code));
                    if let Some((pair, _)) = split_group(group, open) {
                        if let [v, l] = pair.as_slice() {
                            let label = l.iter().find(|t| t.kind == IrTokenKind::Local).map(|t| t.name().to_string());
                            incoming.push((value_of(v, types), label.unwrap_or_default()));
                        }
                    }
                }
            }
            operands = ty;
            for (v, l) in &incoming {
                operands.push(match v {
                    Value::Local(n) => Operand::Local(n.clone()),
                    Value::Global(n) => Operand::Global(n.clone()),
                    Value::Const(c) => Operand::Const(c.clone()),
                    Value::ConstExpr { base } => base.clone().map(Operand::Global).unwrap_or(Operand::Const(String::new())),
                });
                operands.push(Operand::Label(l.clone()));
            }
            InstKind::Phi { incoming }
        }
        "unreachable" => InstKind::Unreachable,
        _ => InstKind::Other,
    };
    Ok(IrStatement { result, opcode, operands, kind, debug, raw, ll_line })
}

fn label_targets(operands: &[Operand]) -> Vec<String> {
    operands
        .iter()
        .filter_map(|o| match o {
            Operand::Label(l) => Some(l.clone()),
            _ => None,
        })
        .collect()
}

fn parse_global(line: &str, tokens: &[IrToken], meta: &MetadataTable) -> IrGlobal {
    let name = tokens[0].name().to_string();
    let kw = tokens.iter().position(|t| t.is("global") || t.is("constant") || t.is("alias")).unwrap_or(tokens.len());
    let linkage = &tokens[2..kw.min(tokens.len())];
    let internal = linkage.iter().any(|t| t.is("internal") || t.is("private"));
    let external = linkage.iter().any(|t| t.is("external") || t.is("extern_weak"));
    let mut debug = None;
    let mut source_name = None;
    if let Some(p) = tokens.iter().position(|t| t.kind == IrTokenKind::Meta && t.text == "!dbg") {
        if let Some((n, loc)) = tokens.get(p + 1).and_then(|m| meta.variable(&m.text)) {
            debug = loc;
            if n != name {
                source_name = Some(n);
            }
        }
    }
    let refs = tokens[1..].iter().filter(|t| t.kind == IrTokenKind::Global).map(|t| t.name().to_string()).collect();
    IrGlobal { name, raw: line.to_string(), internal, external, refs, debug, source_name }
}

/// Checks the numbering and single-definition rules and records the
/// implicit entry label. Errors carry the offending `.ll` line.
fn validate_ssa(f: &mut IrFunction) -> Result<(), (Option<usize>, String)> {
    type Check = Result<(), (Option<usize>, String)>;
    fn define(defined: &mut HashSet<String>, name: &str, next: &mut u64, line: Option<usize>) -> Check {
        if let Ok(n) = name.parse::<u64>() {
            if n != *next {
                return Err((line, format!("malformed SSA id %{n}: expected %{next}")));
            }
            *next += 1;
        }
        if !defined.insert(name.to_string()) {
            return Err((line, format!("%{name} is defined twice")));
        }
        Ok(())
    }
    let mut next: u64 = 0;
    let mut defined: HashSet<String> = HashSet::new();
    for p in &mut f.params {
        if p.name.is_empty() {
            p.name = next.to_string();
        }
        define(&mut defined, &p.name, &mut next, None)?;
    }
    if !f.statements.first().is_some_and(|s| s.is_label()) {
        f.entry_label = next.to_string();
        define(&mut defined, &f.entry_label, &mut next, None)?;
    }
    // labels may be referenced before their definition, so collect them first
    let labels: HashSet<String> = f.statements.iter().filter(|s| s.is_label()).filter_map(|s| s.result.clone()).collect();
    for s in &f.statements {
        if !matches!(s.kind, InstKind::Phi { .. }) {
            for u in s.used_locals() {
                if !defined.contains(u) && !labels.contains(u) {
                    return Err((Some(s.ll_line), format!("%{u} is used before its definition")));
                }
            }
        }
        if let Some(r) = &s.result {
            define(&mut defined, r, &mut next, Some(s.ll_line))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stmt(text: &str) -> IrStatement {
        parse_statement(text, 1, &HashSet::new(), &MetadataTable::default()).unwrap()
    }

    #[test]
    fn call_without_result() {
        let s = stmt("call void @printLine(), !dbg !47");
        assert_eq!(s.result, None);
        assert_eq!(s.callee(), Some("printLine"));
        assert_eq!(s.kind, InstKind::Call { callee: Some("printLine".into()), args: vec![] });
    }

    #[test]
    fn varargs_call_with_constant_expression() {
        let s = stmt(r#"%2 = call i32 (i8*, ...) @printf(i8* noundef getelementptr inbounds ([4 x i8], [4 x i8]* @.str, i64 0, i64 0), i8* noundef %1)"#);
        let InstKind::Call { callee, args } = &s.kind else { panic!() };
        assert_eq!(callee.as_deref(), Some("printf"));
        assert_eq!(args, &[Value::ConstExpr { base: Some(".str".into()) }, Value::Local("1".into())]);
    }

    #[test]
    fn memory_instructions() {
        assert_eq!(stmt("%5 = load i32, i32* %1, align 4").kind, InstKind::Load { ptr: Value::Local("1".into()) });
        assert_eq!(
            stmt("store i8* %12, i8** @data, align 8").kind,
            InstKind::Store { value: Value::Local("12".into()), ptr: Value::Global("data".into()) }
        );
        assert_eq!(stmt("%4 = getelementptr inbounds [100 x i8], [100 x i8]* %2, i64 0, i64 0").kind, InstKind::Gep { base: Value::Local("2".into()) });
        assert_eq!(stmt("%9 = sext i32 %8 to i64").kind, InstKind::Cast { src: Value::Local("8".into()) });
        let s = stmt("%2 = alloca [100 x i8], align 16");
        assert_eq!(s.operands[0], Operand::Type("[100 x i8]".into()));
    }

    #[test]
    fn opaque_pointers_are_accepted() {
        assert_eq!(stmt("%3 = load ptr, ptr %2, align 8").kind, InstKind::Load { ptr: Value::Local("2".into()) });
        assert_eq!(
            stmt("store ptr %x, ptr @g, align 8").kind,
            InstKind::Store { value: Value::Local("x".into()), ptr: Value::Global("g".into()) }
        );
    }

    #[test]
    fn control_flow() {
        assert_eq!(
            stmt("br i1 %6, label %7, label %9, !dbg !3").kind,
            InstKind::Br { cond: Some(Value::Local("6".into())), targets: vec!["7".into(), "9".into()] }
        );
        assert_eq!(stmt("br label %5").kind, InstKind::Br { cond: None, targets: vec!["5".into()] });
        assert_eq!(stmt("ret void").kind, InstKind::Ret { value: None });
        assert_eq!(stmt("ret i32 %4").kind, InstKind::Ret { value: Some(Value::Local("4".into())) });
        let phi = stmt("%8 = phi i1 [ false, %2 ], [ %6, %5 ]");
        assert_eq!(phi.kind, InstKind::Phi { incoming: vec![(Value::Const("false".into()), "2".into()), (Value::Local("6".into()), "5".into())] });
        assert_eq!(phi.used_locals().collect::<Vec<_>>(), ["6"]);
        let sw = stmt("switch i32 %3, label %6 [\n  i32 1, label %4\n  i32 2, label %5\n]");
        assert_eq!(sw.kind, InstKind::Switch { cond: Value::Local("3".into()), targets: vec!["6".into(), "4".into(), "5".into()] });
    }

    #[test]
    fn labels() {
        let s = stmt("5:                                                ; preds = %0");
        assert!(s.is_label());
        assert_eq!(s.result.as_deref(), Some("5"));
        assert!(stmt("if.then:").is_label());
    }

    #[test]
    fn ssa_violations_are_rejected() {
        let dup = "define void @f() {\n  %1 = alloca i32\n  %1 = alloca i32\n  ret void\n}\n";
        let gap = "define void @f() {\n  %1 = alloca i32\n  %3 = alloca i32\n  ret void\n}\n";
        let early = "define void @f() {\n  %1 = load i32, i32* %2\n  %2 = alloca i32\n  ret void\n}\n";
        for (src, line) in [(dup, 3), (gap, 3), (early, 2)] {
            match parse_ll(src, "x.ll") {
                Err(IrError::Parse { line: l, .. }) => assert_eq!(l, line, "{src}"),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn empty_function_and_declarations() {
        let m = parse_ll("define void @f() {\n}\ndeclare i32 @printf(i8*, ...)\n", "e.ll").unwrap();
        assert_eq!(m.functions.len(), 2);
        assert!(m.functions[0].statements.is_empty());
        assert!(m.declared_externals.contains("printf"));
    }

    #[test]
    fn params_and_entry_label() {
        let m = parse_ll("define internal i32 @g(i8* %0, i32 %1) {\n  %3 = alloca i8*\n  ret i32 %1\n}\n", "g.ll").unwrap();
        let f = &m.functions[0];
        assert!(f.internal);
        assert_eq!(f.params.iter().map(|p| p.name.as_str()).collect::<Vec<_>>(), ["0", "1"]);
        assert_eq!(f.params[0].ty, "i8*");
        assert_eq!(f.entry_label, "2");
        assert_eq!(f.numeric_ids().into_iter().collect::<Vec<_>>(), [0, 1, 2, 3]);
    }
}
