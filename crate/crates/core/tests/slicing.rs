mod common;

use std::collections::BTreeSet;

use irloc::dependence::{build_dependence_graph, DependenceGraph};
use irloc::frontend::{extract_from_source, ApiList, CandidateKind, SyntaxCandidate};
use irloc::ir::{parse_ll, LinkedModule, ProgramGroup, StmtRef};
use irloc::slicing::{build_candidate, generate_isevcs, locate_anchor, slice, SemanticCandidate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture() -> (Vec<SyntaxCandidate>, Vec<ProgramGroup>) {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/example/");
    let src = std::fs::read_to_string(format!("{dir}example.c")).unwrap();
    let ll = std::fs::read_to_string(format!("{dir}example.ll")).unwrap();
    let candidates = extract_from_source(&src, "example.c", &ApiList::default()).unwrap();
    let linked = LinkedModule::link(vec![parse_ll(&ll, "example.ll").unwrap()]).unwrap();
    (candidates, vec![ProgramGroup { program: "example".into(), linked }])
}

fn find(out: &[SemanticCandidate], kind: CandidateKind, line: u32) -> &SemanticCandidate {
    out.iter().find(|c| c.kind == kind && c.line == line).unwrap()
}

#[test]
fn slice_of_data_contains_the_conditional_and_inlined_callee() {
    let (cands, groups) = fixture();
    let out = generate_isevcs(&cands, &groups).unwrap();
    assert_eq!(out.candidates.len(), 8);
    assert!(out.skipped.is_empty());
    let data = find(&out.candidates, CandidateKind::PD, 2);
    let texts: Vec<&str> = data.texts().collect();
    assert!(texts.contains(&"%6 = icmp slt i32 100, %5"));
    assert!(texts.contains(&"%8 = select i1 %6, i32 100, i32 99"));
    let call = texts.iter().position(|t| *t == "call void @printLine()").unwrap();
    assert_eq!(texts[call + 1], "%17 = load i8*, i8** @data, align 8");
    assert!(texts[call + 2].ends_with("i8* noundef %17)"));
    assert_eq!(data.functions, ["main", "printLine"]);
    assert_eq!(texts[0], "@data = dso_local global i8* null, align 8");
    assert_eq!(data.statements[data.anchor].text, "store i8* %12, i8** @data, align 8");
}

#[test]
fn memmove_anchor_is_the_intrinsic_call() {
    let (cands, groups) = fixture();
    let c = cands.iter().find(|c| c.kind == CandidateKind::FC && c.line == 25).unwrap();
    let anchor = locate_anchor(c, &groups[0].linked);
    assert_eq!(anchor.len(), 1);
    let s = groups[0].linked.statement(*anchor.iter().next().unwrap());
    assert!(s.raw.starts_with("call void @llvm.memmove"));
}

#[test]
fn candidate_on_a_line_without_code_is_skipped() {
    let (_, groups) = fixture();
    let c = SyntaxCandidate { kind: CandidateKind::AE, file: "example.c".into(), line: 12, column: 1, tokens: vec!["x".into()], span: None };
    let out = generate_isevcs(&[c], &groups).unwrap();
    assert!(out.candidates.is_empty());
    assert_eq!(out.skipped.len(), 1);
    let other = SyntaxCandidate { kind: CandidateKind::AE, file: "other.c".into(), line: 3, column: 1, tokens: vec!["x".into()], span: None };
    assert_eq!(generate_isevcs(&[other], &groups).unwrap().skipped[0].1, irloc::slicing::SkipReason::NoModule);
}

#[test]
fn slice_equals_bidirectional_closure_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..200 {
        let n = rng.gen_range(1..=20);
        let m = rng.gen_range(0..=2 * n);
        let edges: Vec<(usize, usize)> = (0..m).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))).collect();
        let g = DependenceGraph::from_edges(n, &edges);
        let anchor: BTreeSet<usize> = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0..n)).collect();
        let reach = common::closure_matrix(n, &edges);
        let want: BTreeSet<usize> = (0..n).filter(|&j| anchor.iter().any(|&a| reach[a][j] || reach[j][a])).collect();
        let got: BTreeSet<usize> = slice(&g, &anchor.iter().map(|&a| StmtRef::new(0, 0, a)).collect()).iter().map(|s| s.index as usize).collect();
        assert_eq!(got, want, "edges {edges:?} anchor {anchor:?}");
    }
}

#[test]
fn enlarging_the_anchor_never_shrinks_the_slice() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..100 {
        let n = rng.gen_range(2..=20);
        let edges: Vec<(usize, usize)> = (0..n).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))).collect();
        let g = DependenceGraph::from_edges(n, &edges);
        let small = BTreeSet::from([StmtRef::new(0, 0, rng.gen_range(0..n))]);
        let mut big = small.clone();
        big.insert(StmtRef::new(0, 0, rng.gen_range(0..n)));
        assert!(slice(&g, &small).is_subset(&slice(&g, &big)));
    }
}

#[test]
fn inlined_candidates_are_valid_ssa_on_random_call_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..150 {
        let text = common::random_program(&mut rng);
        let linked = LinkedModule::link(vec![parse_ll(&text, "r.ll").unwrap()]).unwrap();
        let graph = build_dependence_graph(&linked).unwrap();
        let nodes = graph.nodes();
        let anchor = BTreeSet::from([nodes[rng.gen_range(0..nodes.len())]]);
        let c = SyntaxCandidate { kind: CandidateKind::AE, file: "r.c".into(), line: 1, column: 1, tokens: vec![], span: None };
        let cand = build_candidate("c1".into(), &c, &linked, &graph, &anchor);
        common::check_ssa(&cand).unwrap_or_else(|e| panic!("{e}\nprogram:\n{text}\ncandidate:\n{}", cand.texts().collect::<Vec<_>>().join("\n")));
    }
}

#[test]
fn two_calls_to_one_callee_get_disjoint_copies() {
    let text = "define i32 @g(i32 %0) {\n  %2 = add i32 %0, 1\n  ret i32 %2\n}\n\
                define i32 @main() {\n  %1 = call i32 @g(i32 3)\n  %2 = call i32 @g(i32 %1)\n  ret i32 %2\n}\n";
    let linked = LinkedModule::link(vec![parse_ll(text, "t.ll").unwrap()]).unwrap();
    let graph = build_dependence_graph(&linked).unwrap();
    let main = linked.functions["main"];
    let c = SyntaxCandidate { kind: CandidateKind::FC, file: "t.c".into(), line: 1, column: 1, tokens: vec![], span: None };
    let cand = build_candidate("c1".into(), &c, &linked, &graph, &BTreeSet::from([main.stmt(2)]));
    let texts: Vec<&str> = cand.texts().collect();
    assert_eq!(
        texts,
        [
            "%1 = call i32 @g(i32 3)",
            "%3 = add i32 3, 1",
            "ret i32 %3",
            "%2 = call i32 @g(i32 %1)",
            "%4 = add i32 %1, 1",
            "ret i32 %4",
            "ret i32 %2"
        ]
    );
    common::check_ssa(&cand).unwrap();
}

#[test]
fn recursion_is_cut_at_the_first_repeat() {
    let text = "define i32 @r(i32 %0) {\n  %2 = call i32 @r(i32 %0)\n  ret i32 %2\n}\n\
                define i32 @main() {\n  %1 = call i32 @r(i32 1)\n  ret i32 %1\n}\n";
    let linked = LinkedModule::link(vec![parse_ll(text, "t.ll").unwrap()]).unwrap();
    let graph = build_dependence_graph(&linked).unwrap();
    let main = linked.functions["main"];
    let c = SyntaxCandidate { kind: CandidateKind::FC, file: "t.c".into(), line: 1, column: 1, tokens: vec![], span: None };
    let cand = build_candidate("c1".into(), &c, &linked, &graph, &BTreeSet::from([main.stmt(0)]));
    assert_eq!(cand.texts().collect::<Vec<_>>(), ["%1 = call i32 @r(i32 1)", "%2 = call i32 @r(i32 1)", "ret i32 %2", "ret i32 %1"]);
}
