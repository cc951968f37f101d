use std::path::Path;

use irloc::ir::{parse_ll, program_of, read_index, tokenize_line, write_index, DebugLoc, IrTokenKind, LinkedModule, ModuleIndex};
use irloc::FileId;

fn example_ll() -> String {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/example/example.ll")).unwrap()
}

#[test]
fn example_module_has_both_functions_and_the_global() {
    let m = parse_ll(&example_ll(), "example.ll").unwrap();
    assert_eq!(m.source_filename.as_deref(), Some("example.c"));
    let main = m.function("main").unwrap();
    let print = m.function("printLine").unwrap();
    assert!(main.is_definition && print.is_definition);
    assert!(m.function("printf").is_some_and(|f| !f.is_definition));
    assert!(m.global("data").is_some_and(|g| !g.external));
    // every numeric id is defined once
    let defined: Vec<&str> = main.statements.iter().filter_map(|s| s.result.as_deref()).collect();
    let unique: std::collections::BTreeSet<_> = defined.iter().collect();
    assert_eq!(unique.len(), defined.len());
}

#[test]
fn flaw_line_maps_to_its_pointer_arithmetic_and_store() {
    let linked = LinkedModule::link(vec![parse_ll(&example_ll(), "example.ll").unwrap()]).unwrap();
    let stmts = linked.map_source_line(&FileId::new("example.c"), 19);
    let raws: Vec<&str> = stmts.iter().map(|&s| linked.statement(s).raw.as_str()).collect();
    assert!(raws.iter().any(|r| r.contains("getelementptr inbounds i8, i8* %11, i64 -8")), "{raws:?}");
    assert!(raws.iter().any(|r| r.starts_with("store i8* %12, i8** @data")), "{raws:?}");
    for &s in &stmts {
        assert_eq!(linked.statement(s).debug, Some(DebugLoc { file: FileId::new("example.c"), line: 19 }));
    }
    assert!(linked.map_source_line(&FileId::new("example.c"), 12).is_empty());
}

#[test]
fn lexer_keeps_every_non_blank_character() {
    for line in example_ll().lines() {
        // string constants may hold blanks and `;`; skip those lines
        if line.contains('"') {
            continue;
        }
        let tokens = tokenize_line(line).unwrap();
        let code = line.split(';').next().unwrap_or("");
        let joined: String = tokens.iter().map(|t| t.text.as_str()).collect();
        let squeezed: String = code.chars().filter(|c| !c.is_whitespace()).collect();
        assert_eq!(joined, squeezed, "{line}");
    }
    let t = tokenize_line("%5 = call i32 @strlen(i8* %4)").unwrap();
    assert_eq!(t[0].kind, IrTokenKind::Local);
    assert!(t.iter().any(|t| t.kind == IrTokenKind::Global && t.name() == "strlen"));
}

#[test]
fn project_index_groups_one_program_per_directory_and_round_trips() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/project/ir");
    let (index, groups) = ModuleIndex::build(&root).unwrap();
    assert_eq!(groups.len(), 10);
    assert_eq!(index.entries.len(), 10);
    for (g, e) in groups.iter().zip(&index.entries) {
        assert_eq!(g.program, e.program);
        assert_eq!(program_of(&e.path), e.program);
        assert_eq!(e.sha256.len(), 64);
    }
    let text = write_index(&index);
    let back = read_index(&text).unwrap();
    assert_eq!(back, index);
    assert_eq!(back.load_groups().unwrap().len(), 10);
}

#[test]
fn program_is_the_top_directory() {
    assert_eq!(program_of("p01/main.ll"), "p01");
    assert_eq!(program_of("p01/sub/helper.ll"), "p01");
    assert_eq!(program_of("single.ll"), "single");
}

#[test]
fn malformed_modules_report_their_line() {
    let err = parse_ll("define void @f() {\n  %1 = add i32 1, 2\n", "bad.ll").unwrap_err();
    assert!(err.to_string().contains("bad.ll"), "{err}");
}
