mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use csent::dataset::{read_jsonl, to_jsonl, CommitRecord, Label, Provenance};
use csent::models::load_checkpoint;

fn csent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csent"))
        .args(args)
        .env("CSENT_THREADS", "2")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = csent(args);
    assert!(
        out.status.success(),
        "csent {args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const SMALL: &str = "\
# small enough for tests
hcnn.embedding_dim = 8
hcnn.window_sizes = 2,3
hcnn.filters_per_window = 4
hcnn.commit_filters = 8
hcnn.hidden_dim = 8
train.max_epochs = 4
train.patience = 2
vocab.min_count = 1
";

#[test]
fn pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let path = |name: &str| d.join(name);
    fs::write(path("small.cfg"), SMALL).unwrap();

    // ingest from a real repository
    let repo = common::TempRepo::new();
    repo.write(
        "src/Auth.java",
        "class Auth {\n  boolean ok(String t) { return true; }\n}\n",
    );
    repo.write("docs/notes.md", "notes\n");
    let first = repo.commit("initial");
    repo.write(
        "src/Auth.java",
        "class Auth {\n  boolean ok(String t) { return verify(t); }\n}\n",
    );
    let fix = repo.commit("Fix authentication bypass");
    repo.write("docs/notes.md", "more notes\n");
    let docs = repo.commit("docs");
    fs::write(path("shas.txt"), format!("# fixes\n{fix}\n{first} 0\n{docs} 0\n")).unwrap();
    let msg = ok(&[
        "ingest",
        "--repo",
        p(repo.path()),
        "--shas",
        p(&path("shas.txt")),
        "--out",
        p(&path("ingested/auth.jsonl")),
        "--repo-id",
        "org/auth",
    ]);
    assert!(msg.contains("ingested 2 commits"), "{msg}");
    let ingested = read_jsonl(&path("ingested/auth.jsonl")).unwrap();
    assert_eq!(
        ingested
            .iter()
            .map(|r| (r.sha.as_str(), r.label))
            .collect::<Vec<_>>(),
        [
            (fix.as_str(), Label::Security),
            (first.as_str(), Label::NotSecurity)
        ]
    );
    assert!(path("ingested/run-config.txt").exists());

    // mining reads messages; the mined records are relabelled
    let corpus = common::java_corpus(4, 10, 7);
    let candidates: Vec<CommitRecord> = common::java_corpus(2, 6, 8)
        .into_iter()
        .enumerate()
        .map(|(i, mut r)| {
            r.repo = format!("org/extra{}", i % 2);
            r.label = Label::NotSecurity;
            r
        })
        .collect();
    fs::write(path("all.jsonl"), to_jsonl(&corpus)).unwrap();
    fs::write(path("candidates.jsonl"), to_jsonl(&candidates)).unwrap();
    fs::write(path("patterns.txt"), "vulnerab\n").unwrap();
    ok(&[
        "mine",
        "--in",
        p(&path("candidates.jsonl")),
        "--patterns",
        p(&path("patterns.txt")),
        "--out",
        p(&path("mined.jsonl")),
    ]);
    let mined = read_jsonl(&path("mined.jsonl")).unwrap();
    assert_eq!(
        mined.len(),
        candidates
            .iter()
            .filter(|r| r.message.contains("vulnerab"))
            .count()
    );
    assert!(mined
        .iter()
        .all(|r| r.label == Label::Security && r.provenance == Provenance::Mined));

    let splits = path("splits");
    ok(&[
        "split",
        "--in",
        p(&path("all.jsonl")),
        p(&path("mined.jsonl")),
        "--ratios",
        "0.5,0.25,0.25",
        "--seed",
        "3",
        "--out-dir",
        p(&splits),
    ]);
    let config_echo = fs::read_to_string(splits.join("run-config.txt")).unwrap();
    assert!(config_echo.contains("split.ratios = 0.5,0.25,0.25") && config_echo.contains("split.seed = 3"));
    let train = read_jsonl(&splits.join("train.jsonl")).unwrap();
    let test = read_jsonl(&splits.join("test.jsonl")).unwrap();
    assert!(train.iter().any(|r| r.provenance == Provenance::Mined));
    assert!(test.iter().all(|r| r.provenance == Provenance::GroundTruth));

    let cfg = p(&path("small.cfg")).to_owned();
    ok(&[
        "vocab",
        "--config",
        &cfg,
        "--in",
        p(&splits.join("train.jsonl")),
        "--out",
        p(&path("vocab.txt")),
    ]);

    let sources = path("sources");
    for (i, r) in corpus.iter().enumerate().take(12) {
        let f = sources.join(format!("pkg{}/F{i}.java", i % 3));
        fs::create_dir_all(f.parent().unwrap()).unwrap();
        fs::write(f, r.files[0].after_source.as_deref().unwrap()).unwrap();
    }
    ok(&[
        "pretrain-embeddings",
        "--config",
        &cfg,
        "--corpus",
        p(&sources),
        "--vocab",
        p(&path("vocab.txt")),
        "--out",
        p(&path("emb.txt")),
        "--set",
        "cbow.dim=8",
        "--set",
        "cbow.epochs=1",
    ]);

    let train_args = |out: &str, variant: &str, extra: &[&str]| -> Vec<String> {
        let mut a: Vec<String> = [
            "train",
            "--config",
            &cfg,
            "--variant",
            variant,
            "--train",
            p(&splits.join("train.jsonl")),
            "--val",
            p(&splits.join("validation.jsonl")),
            "--seed",
            "1",
            "--out",
            p(&path(out)),
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        a.extend(extra.iter().map(|s| s.to_string()));
        a
    };
    let run_train = |args: Vec<String>| ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    run_train(train_args("models/a.ckpt", "diff-hcnn", &[]));
    run_train(train_args("models/b.ckpt", "diff-hcnn", &[]));
    assert_eq!(
        fs::read(path("models/a.ckpt")).unwrap(),
        fs::read(path("models/b.ckpt")).unwrap()
    );
    let echo = fs::read_to_string(path("models/run-config.txt")).unwrap();
    assert!(echo.contains("train.seed = 1") && echo.contains("hcnn.embedding_dim = 8"));
    run_train(train_args("models/lr.ckpt", "lr-baseline", &[]));
    run_train(train_args(
        "models/pre.ckpt",
        "paired-hrcnn",
        &[
            "--embeddings",
            p(&path("emb.txt")),
            "--vocab",
            p(&path("vocab.txt")),
        ],
    ));
    let pre = load_checkpoint(&path("models/pre.ckpt")).unwrap();
    assert_eq!(csent::eval::embedding_label(&pre.model.config()), "Pre-trained");

    let table = ok(&[
        "evaluate",
        "--ckpt",
        p(&path("models/a.ckpt")),
        "--split",
        p(&splits.join("test.jsonl")),
        "--out",
        p(&path("eval/a.json")),
    ]);
    assert!(
        table.contains("Diff Tokens") && table.contains("H-CNN"),
        "{table}"
    );
    ok(&[
        "evaluate",
        "--ckpt",
        p(&path("models/lr.ckpt")),
        "--split",
        p(&splits.join("test.jsonl")),
        "--out",
        p(&path("eval/lr.json")),
    ]);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(path("eval/a.json")).unwrap()).unwrap();
    assert_eq!(summary["variant"], "diff-hcnn");
    assert_eq!(summary["split"], "test");
    assert_eq!(summary["records"], test.len());
    let m = &summary["metrics"];
    let counted = ["tp", "fp", "fn", "tn"]
        .iter()
        .map(|k| m[k].as_u64().unwrap())
        .sum::<u64>();
    assert_eq!(counted as usize, test.len());
    let scores = fs::read_to_string(path("eval/a.scores.jsonl")).unwrap();
    assert_eq!(scores.lines().count(), test.len());

    let report = ok(&[
        "report",
        "--in",
        p(&path("eval/a.json")),
        p(&path("eval/lr.json")),
        "--jsonl",
        p(&path("eval/rows.jsonl")),
    ]);
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines.len(), 3, "{report}");
    assert!(lines[0].starts_with("Input features"));
    assert!(lines[2].contains("LR") && lines[2].contains("One-hot"));
    assert_eq!(
        fs::read_to_string(path("eval/rows.jsonl"))
            .unwrap()
            .lines()
            .count(),
        2
    );

    // predict agrees with the library on the same patch
    let patch = repo.git(&["show", "--format=", &fix]);
    fs::write(path("fix.patch"), &patch).unwrap();
    let printed = ok(&[
        "predict",
        "--ckpt",
        p(&path("models/a.ckpt")),
        "--diff",
        p(&path("fix.patch")),
    ]);
    let value: f64 = printed
        .trim()
        .strip_prefix("security_relevant_probability=")
        .unwrap()
        .parse()
        .unwrap();
    let ckpt = load_checkpoint(&path("models/a.ckpt")).unwrap();
    let files = csent::dataset::parse_unified_diff(&patch).unwrap();
    let encoded = csent::dataset::EncodedCommit::new(
        csent::dataset::CommitCode { files: &files },
        Label::NotSecurity,
        &ckpt.vocab,
        &ckpt.features,
    );
    let expected = ckpt.model.predict(&encoded).unwrap().probability_security;
    assert_eq!(
        printed.trim(),
        format!("security_relevant_probability={expected:.6}")
    );
    assert!((0.0..=1.0).contains(&value));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let out = csent(&[
        "predict",
        "--ckpt",
        p(&d.join("missing.ckpt")),
        "--diff",
        p(&d.join("x.patch")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error:") && err.lines().count() == 1, "{err}");

    let out = csent(&["split", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    let out = csent(&[
        "train",
        "--variant",
        "diff-hcnn",
        "--train",
        "a",
        "--val",
        "b",
        "--out",
        "c",
        "--embeddings",
        "e",
    ]);
    assert_eq!(out.status.code(), Some(2));

    fs::write(d.join("bad.cfg"), "hcnn.depth = 3\n").unwrap();
    let out = csent(&[
        "vocab",
        "--config",
        p(&d.join("bad.cfg")),
        "--in",
        "x",
        "--out",
        "y",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));

    let out = Command::new(env!("CARGO_BIN_EXE_csent"))
        .args(["report", "--in", "x.json"])
        .env("CSENT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    fs::write(
        d.join("empty.patch"),
        "diff --git a/README b/README\n--- a/README\n+++ b/README\n@@ -1 +1 @@\n-a\n+b\n",
    )
    .unwrap();
    let records = common::java_corpus(3, 4, 1);
    let vocab = common::corpus_vocab(&records);
    let ckpt = common::quick_checkpoint(
        csent::models::Variant::LrBaseline,
        &records[..8],
        &records[8..],
        &vocab,
        None,
    );
    csent::models::save_checkpoint(&d.join("m.ckpt"), &ckpt).unwrap();
    let out = csent(&[
        "predict",
        "--ckpt",
        p(&d.join("m.ckpt")),
        "--diff",
        p(&d.join("empty.patch")),
    ]);
    assert_eq!(out.status.code(), Some(1));

    let out = csent(&["--version"]);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap().trim(),
        format!("csent {}", env!("CARGO_PKG_VERSION"))
    );
    for sub in [
        "ingest",
        "mine",
        "split",
        "vocab",
        "pretrain-embeddings",
        "train",
        "evaluate",
        "report",
        "predict",
    ] {
        let out = csent(&[sub, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{sub}");
    }
}
