//! Generated labeled corpora with planted vulnerable statements.
//!
//! Each record looks like a slice of a small C function in IR form: stack
//! slots, loads, stores, arithmetic, branches and calls. Vulnerable records
//! contain one or two planted flaw statements (a pointer stepped backwards,
//! a fill longer than its buffer, an unbounded string copy);
//! non-vulnerable records contain the safe counterpart in the same place.
//! The planted statements are the labeled lines.
//!
//! ```
//! use irloc::synthetic::{generate_corpus, SyntheticConfig};
//!
//! let corpus = generate_corpus(&SyntheticConfig { samples: 20, ..SyntheticConfig::default() }, 3);
//! assert_eq!(corpus.len(), 20);
//! assert_eq!(corpus, generate_corpus(&SyntheticConfig { samples: 20, ..SyntheticConfig::default() }, 3));
//! let vulnerable = corpus.iter().filter(|r| r.is_vulnerable()).count();
//! assert!(vulnerable > 0 && vulnerable < 20);
//! ```

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::LabeledCandidate;
use crate::frontend::CandidateKind;
use crate::ir::DebugLoc;
use crate::slicing::{CandidateStatement, Origin, SemanticCandidate};
use crate::FileId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub samples: usize,
    pub vulnerable_fraction: f64,
    pub min_statements: usize,
    pub max_statements: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig { samples: 500, vulnerable_fraction: 0.5, min_statements: 6, max_statements: 16 }
    }
}

const CONSTANTS: [i32; 7] = [0, 1, 2, 4, 10, 16, 32];
const USER_FUNCTIONS: [&str; 3] = ["printLine", "helper", "process"];

struct Ids {
    next: usize,
    defined: Vec<usize>,
}

impl Ids {
    fn fresh(&mut self) -> usize {
        self.next += 1;
        self.defined.push(self.next);
        self.next
    }

    fn any(&self, rng: &mut ChaCha8Rng) -> usize {
        *self.defined.choose(rng).unwrap_or(&1)
    }
}

fn filler(rng: &mut ChaCha8Rng, ids: &mut Ids) -> (String, bool) {
    let k = CONSTANTS[rng.gen_range(0..CONSTANTS.len())];
    let a = ids.any(rng);
    match rng.gen_range(0..9) {
        0 => (format!("%{} = alloca i32, align 4", ids.fresh()), false),
        1 => (format!("store i32 {k}, i32* %{a}, align 4"), true),
        2 => (format!("%{} = load i32, i32* %{a}, align 4", ids.fresh()), true),
        3 => (format!("%{} = add nsw i32 %{a}, {k}", ids.fresh()), true),
        4 => (format!("%{} = icmp slt i32 %{a}, {k}", ids.fresh()), true),
        5 => (format!("br i1 %{a}, label %{}, label %{}", a + 1, a + 2), true),
        6 => {
            let f = USER_FUNCTIONS[rng.gen_range(0..USER_FUNCTIONS.len())];
            (format!("call void @{f}(i32 %{a})"), true)
        }
        7 => (
            format!("%{} = call i32 (i8*, ...) @printf(i8* getelementptr inbounds ([4 x i8], [4 x i8]* @.str, i64 0, i64 0))", ids.fresh()),
            true,
        ),
        _ => (format!("%{} = sext i32 %{a} to i64", ids.fresh()), true),
    }
}

/// A flaw statement or its safe counterpart.
fn pattern(rng: &mut ChaCha8Rng, ids: &mut Ids, flawed: bool) -> String {
    let (a, b) = (ids.any(rng), ids.any(rng));
    match rng.gen_range(0..3) {
        0 => {
            let offset = if flawed { "-8" } else { "8" };
            format!("%{} = getelementptr inbounds i8, i8* %{a}, i64 {offset}", ids.fresh())
        }
        // a constant fill length overruns the buffer; the safe fill takes a
        // computed bound (two constants alone would share every context and
        // so get near-identical embeddings)
        1 => {
            let len = if flawed { "100".to_string() } else { format!("%{b}") };
            format!("call void @llvm.memset.p0i8.i64(i8* align 16 %{a}, i8 65, i64 {len}, i1 false)")
        }
        _ if flawed => format!("%{} = call i8* @strcpy(i8* %{a}, i8* %{b})", ids.fresh()),
        _ => format!("%{} = call i8* @strncpy(i8* %{a}, i8* %{b}, i64 %{})", ids.fresh(), ids.any(rng)),
    }
}

/// Generates `config.samples` labeled records; identical for identical seeds.
pub fn generate_corpus(config: &SyntheticConfig, seed: u64) -> Vec<LabeledCandidate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..config.samples).map(|i| generate_record(&mut rng, config, i)).collect()
}

fn generate_record(rng: &mut ChaCha8Rng, config: &SyntheticConfig, i: usize) -> LabeledCandidate {
    let vulnerable = rng.gen_bool(config.vulnerable_fraction.clamp(0.0, 1.0));
    let n = rng.gen_range(config.min_statements.max(2)..=config.max_statements.max(config.min_statements.max(2)));
    let planted = if rng.gen_bool(0.2) { 2 } else { 1 };
    let mut slots: Vec<usize> = (1..n).collect();
    slots.shuffle(rng);
    let mut pattern_slots: Vec<usize> = slots[..planted.min(slots.len())].to_vec();
    pattern_slots.sort_unstable();

    let program = format!("syn{:04}", i + 1);
    let file = FileId::new(format!("{program}/main.c"));
    let module = FileId::new(format!("{program}/main.ll"));
    let mut ids = Ids { next: 0, defined: Vec::new() };
    let first = format!("%{} = alloca i8*, align 8", ids.fresh());
    let mut statements = vec![(first, false)];
    let mut label = Vec::new();
    for s in 1..n {
        if pattern_slots.contains(&s) {
            statements.push((pattern(rng, &mut ids, vulnerable), true));
            if vulnerable {
                label.push(s + 1);
            }
        } else {
            statements.push(filler(rng, &mut ids));
        }
    }
    let statements: Vec<CandidateStatement> = statements
        .into_iter()
        .enumerate()
        .map(|(k, (text, located))| CandidateStatement {
            text,
            debug: located.then(|| DebugLoc { file: file.clone(), line: 10 + k as u32 }),
            origin: Origin::Statement { module: module.clone(), function: "main".into(), index: k },
        })
        .collect();
    let anchor = pattern_slots[0];
    LabeledCandidate {
        candidate: SemanticCandidate {
            id: format!("c{}", i + 1),
            kind: CandidateKind::ALL[rng.gen_range(0..CandidateKind::ALL.len())],
            file,
            line: 10 + anchor as u32,
            anchor,
            globals: 0,
            statements,
            functions: vec!["main".into()],
        },
        label: Some(label),
    }
}
