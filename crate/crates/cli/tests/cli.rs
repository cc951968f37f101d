use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn irloc(work: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irloc"))
        .args(args)
        .env("IRLOC_WORK_DIR", work)
        .env_remove("RUST_LOG")
        .output()
        .expect("irloc runs")
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/project")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("irloc.toml");
    std::fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = r#"
schema = 1
seed = 3

[data]
max_tokens = 64
holdout = 0.0

[embedding]
dim = 8
epochs = 2

[model]
layers = 1
hidden = 8
dense = 8
dropout = 0.0

[train]
epochs = 2
batch = 8
learning_rate = 0.01
"#;

#[test]
fn help_exits_zero_and_usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let help = irloc(dir.path(), &["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(stdout(&help).contains("explain"));
    assert_eq!(irloc(dir.path(), &[]).status.code(), Some(1));
    assert_eq!(irloc(dir.path(), &["frobnicate"]).status.code(), Some(1));
}

#[test]
fn bad_configuration_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "schema = 9\n");
    let out = irloc(dir.path(), &["--config", config.to_str().unwrap(), "run"]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stderr(&out).contains("schema"));
    // neither a project nor a synthetic corpus
    let out = irloc(dir.path(), &["run"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_artifacts_name_the_stage_to_run_and_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let work = dir.path().join("work");
    let out = irloc(&work, &["train"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("train.bin") && err.contains("`encode`"), "{err}");
}

#[test]
fn work_dir_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let work = dir.path().join("from-env");
    let out = irloc(&work, &["synthesize", "--samples", "12"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(work.join("corpus.txt").is_file());
    assert!(work.join("manifest.json").is_file());
    // the flag wins over the variable
    let flagged = dir.path().join("from-flag");
    let out = irloc(&work, &["--work-dir", flagged.to_str().unwrap(), "synthesize", "--samples", "12"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(flagged.join("corpus.txt").is_file());
}

#[test]
fn synthetic_run_reports_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &format!("{SMALL}\n[synthetic]\nsamples = 40\n"));
    let work = dir.path().join("work");
    let out = irloc(&work, &["--config", config.to_str().unwrap(), "run", "--phase", "all"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    for key in ["synthesize", "encode", "train", "detect", "eval", "F1\t", "IoU\t"] {
        assert!(text.contains(key), "missing {key} in\n{text}");
    }
    let explained = irloc(&work, &["--config", config.to_str().unwrap(), "explain", "c3"]);
    assert_eq!(explained.status.code(), Some(0), "{}", stderr(&explained));
    assert!(stdout(&explained).starts_with("candidate c3\n"));
}

#[test]
fn project_learn_then_test_phase_and_explain() {
    let dir = tempfile::tempdir().unwrap();
    let root = fixture();
    let config = write_config(
        dir.path(),
        &format!(
            "{SMALL}\n[paths]\nsource = \"{}\"\nir = \"{}\"\ntruth = \"{}\"\nwork = \"work\"\n",
            root.join("src").display(),
            root.join("ir").display(),
            root.join("truth").display()
        ),
    );
    let c = config.to_str().unwrap();
    let work = dir.path().join("ignored");
    let run = |args: &[&str]| {
        let mut all = vec!["--config", c];
        all.extend_from_slice(args);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_irloc"));
        cmd.args(&all).env_remove("IRLOC_WORK_DIR").env_remove("RUST_LOG");
        cmd.output().unwrap()
    };
    let learn = run(&["run", "--phase", "learn"]);
    assert_eq!(learn.status.code(), Some(0), "{}", stderr(&learn));
    let w = dir.path().join("work");
    for f in ["candidates.txt", "ir-index.txt", "slices.txt", "corpus.txt", "embedding.tsv", "train.bin", "model.bin"] {
        assert!(w.join(f).is_file(), "{f} missing");
    }
    assert!(!work.exists());

    let test = run(&["run", "--phase", "test"]);
    assert_eq!(test.status.code(), Some(0), "{}", stderr(&test));
    let t = w.join("test");
    for f in ["candidates.txt", "slices.txt", "test.bin", "report.tsv", "summary.tsv"] {
        assert!(t.join(f).is_file(), "test/{f} missing");
    }
    // the test phase never labels
    assert!(!t.join("corpus.txt").exists());

    let explained = run(&["explain", "c1", "--phase", "test"]);
    assert_eq!(explained.status.code(), Some(0), "{}", stderr(&explained));
    let text = stdout(&explained);
    assert!(text.contains("syntax candidate: FC p01/main.c"), "{text}");

    let unknown = run(&["explain", "c1000", "--phase", "test"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(stderr(&unknown).contains("nearest ids"));
}

#[test]
fn stages_run_on_explicit_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let root = fixture();
    let d = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let work = dir.path().join("work");
    let steps: Vec<Vec<String>> = vec![
        vec!["extract".into(), "--src".into(), root.join("src").to_str().unwrap().into(), "--out".into(), d("cands.txt")],
        vec!["ingest-ir".into(), "--ll".into(), root.join("ir").to_str().unwrap().into(), "--out".into(), d("index.txt")],
        vec!["slice".into(), "--candidates".into(), d("cands.txt"), "--ir".into(), d("index.txt"), "--out".into(), d("slices.txt")],
        vec!["label".into(), "--corpus".into(), d("slices.txt"), "--truth".into(), root.join("truth").to_str().unwrap().into(), "--out".into(), d("labeled.txt")],
        vec!["encode".into(), "--corpus".into(), d("labeled.txt"), "--dim".into(), "8".into(), "--max-tokens".into(), "64".into(), "--embedding".into(), d("emb.tsv"), "--out".into(), d("data.bin")],
        vec!["train".into(), "--data".into(), d("data.bin"), "--out".into(), d("model.bin")],
        vec!["detect".into(), "--model".into(), d("model.bin"), "--data".into(), d("data.bin"), "--threshold".into(), "0.5".into(), "--report".into(), d("report.tsv")],
        vec!["eval".into(), "--report".into(), d("report.tsv"), "--truth".into(), root.join("truth").to_str().unwrap().into(), "--out".into(), d("summary.tsv")],
    ];
    for step in &steps {
        let mut args = vec!["--config", config.to_str().unwrap()];
        args.extend(step.iter().map(String::as_str));
        let out = irloc(&work, &args);
        assert_eq!(out.status.code(), Some(0), "{step:?}: {}", stderr(&out));
    }
    for f in ["cands.txt", "index.txt", "slices.txt", "labeled.txt", "emb.tsv", "data.bin", "model.bin", "report.tsv", "summary.tsv"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let summary = std::fs::read_to_string(dir.path().join("summary.tsv")).unwrap();
    assert!(summary.starts_with("# irloc summary v1\n"));
    // explicit runs leave the work directory alone
    assert!(!work.join("manifest.json").exists());
}
