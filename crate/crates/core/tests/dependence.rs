mod common;

use irloc::dependence::{build_cfg, build_dependence_graph, control_dependences, post_dominators, Cfg, EdgeKind};
use irloc::ir::{parse_ll, LinkedModule};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn succ_lists(cfg: &Cfg) -> (Vec<Vec<usize>>, Vec<bool>) {
    let mut succ = vec![Vec::new(); cfg.node_count()];
    for &(a, b, _) in &cfg.edges {
        succ[a].push(b);
    }
    let mut live: Vec<bool> = cfg.blocks.iter().map(|b| b.reachable).collect();
    live.push(true);
    (succ, live)
}

#[test]
fn post_dominators_match_path_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let (n, edges, returns) = common::random_cfg(&mut rng, 8);
        let cfg = Cfg::from_edges(n, &edges, &returns);
        let (succ, live) = succ_lists(&cfg);
        let pdom = common::post_dominance_by_paths(&succ, cfg.exit(), &live);
        let ipdom = post_dominators(&cfg);
        for a in (0..n).filter(|&a| live[a]) {
            let p = ipdom[a].expect("live block has an ipdom");
            // ipdom strictly post-dominates a, and every other strict
            // post-dominator of a post-dominates p
            assert!(p != a && pdom[a][p]);
            for b in (0..=n).filter(|&b| b != a && pdom[a][b]) {
                assert!(pdom[p][b], "cfg {edges:?} ret {returns:?}: {b} pdom {a} but not ipdom {p}");
            }
        }
    }
}

#[test]
fn control_dependence_matches_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let (n, edges, returns) = common::random_cfg(&mut rng, 8);
        let cfg = Cfg::from_edges(n, &edges, &returns);
        let (succ, live) = succ_lists(&cfg);
        let want = common::control_dependence_by_definition(&succ, cfg.exit(), &live);
        let got = control_dependences(&cfg, &post_dominators(&cfg));
        assert_eq!(got, want, "cfg {edges:?} ret {returns:?}");
    }
}

/// Renders an abstract CFG as an IR function so `build_cfg` is exercised
/// on real text: block `b` is label `b+1`, two-way branches test `%0`.
fn render_function(n: usize, edges: &[(usize, usize)]) -> String {
    let mut text = String::from("define void @f(i1 %0) {\n");
    for b in 0..n {
        if b > 0 {
            text.push_str(&format!("{}:\n", b + 1));
        }
        let succ: Vec<usize> = edges.iter().filter(|e| e.0 == b).map(|e| e.1 + 1).collect();
        match succ.as_slice() {
            [] => text.push_str("  ret void\n"),
            [s] => text.push_str(&format!("  br label %{s}\n")),
            [s, t] => text.push_str(&format!("  br i1 %0, label %{s}, label %{t}\n")),
            _ => unreachable!(),
        }
    }
    text.push_str("}\n");
    text
}

#[test]
fn cfg_from_ir_text_matches_abstract_cfg() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let (n, edges, returns) = common::random_cfg(&mut rng, 8);
        let f = parse_ll(&render_function(n, &edges), "f.ll").unwrap().functions.remove(0);
        let from_ir = build_cfg(&f).unwrap();
        let abstract_cfg = Cfg::from_edges(n, &edges, &returns);
        let strip = |c: &Cfg| c.edges.iter().map(|e| (e.0, e.1)).collect::<Vec<_>>();
        assert_eq!(strip(&from_ir), strip(&abstract_cfg));
    }
}

#[test]
fn every_data_edge_connects_a_definition_to_a_use() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/example/example.ll")).unwrap();
    let linked = LinkedModule::link(vec![parse_ll(&text, "example.ll").unwrap()]).unwrap();
    let g = build_dependence_graph(&linked).unwrap();
    for e in g.edges().iter().filter(|e| e.kind == EdgeKind::Data) {
        let (from, to) = (linked.statement(e.from), linked.statement(e.to));
        let ssa = from.result.as_deref().is_some_and(|r| e.from.func() == e.to.func() && to.used_locals().any(|u| u == r));
        let memory_writer = matches!(from.opcode.as_str(), "store" | "call");
        let ret = from.opcode == "ret" && to.opcode == "call";
        assert!(ssa || memory_writer || ret, "unexplained data edge {} -> {}", from.raw, to.raw);
    }
    // the store to @data feeds both loads of @data
    let main = linked.functions["main"];
    let print = linked.functions["printLine"];
    let store = (0..linked.function(main).statements.len())
        .map(|i| main.stmt(i))
        .find(|&s| linked.statement(s).raw.starts_with("store i8* %12"))
        .unwrap();
    assert!(g.has_edge(store, print.stmt(0), EdgeKind::Data));
    assert!(g.edges().iter().any(|e| e.from == store && linked.statement(e.to).raw.starts_with("%15 = load")));
    // deterministic
    assert_eq!(build_dependence_graph(&linked).unwrap().edges(), g.edges());
}
