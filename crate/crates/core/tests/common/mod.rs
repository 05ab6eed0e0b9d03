#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use csent::dataset::{CommitRecord, EncodedCommit, FileChange, Label, Provenance};
use csent::lex::{tokenize, TokenCounts, Vocabulary, SPECIALS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Golden case names with a description of each mismatch against its
/// `.tokens` file (one token per line).
pub fn golden_results() -> Vec<(String, Option<String>)> {
    let mut names: Vec<PathBuf> = fs::read_dir(golden_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "java"))
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|java| {
            let name = java.file_stem().unwrap().to_string_lossy().into_owned();
            let source = fs::read_to_string(&java).unwrap();
            let expected = fs::read_to_string(java.with_extension("tokens")).unwrap();
            let problem = match tokenize(&source) {
                Err(e) => Some(format!("lex error {e}")),
                Ok(stream) => {
                    let actual: String = stream.texts().map(|t| format!("{t}\n")).collect();
                    (actual != expected).then(|| format!("expected {expected:?}, got {actual:?}"))
                }
            };
            (name, problem)
        })
        .collect()
}

/// A scratch git repository.
pub struct TempRepo {
    dir: TempDir,
}

impl TempRepo {
    pub fn new() -> Self {
        let repo = TempRepo {
            dir: tempfile::tempdir().unwrap(),
        };
        repo.git(&["init", "-q", "-b", "main"]);
        repo.git(&["config", "user.name", "Test"]);
        repo.git(&["config", "user.email", "test@example.com"]);
        repo.git(&["config", "commit.gpgsign", "false"]);
        repo
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn git(&self, args: &[&str]) -> String {
        let out = Command::new("git")
            .arg("-C")
            .arg(self.path())
            .args(args)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "git {args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    }

    pub fn write(&self, path: &str, text: &str) {
        let full = self.path().join(path);
        fs::create_dir_all(full.parent().unwrap()).unwrap();
        fs::write(full, text).unwrap();
    }

    pub fn remove(&self, path: &str) {
        self.git(&["rm", "-q", path]);
    }

    /// Commits everything in the work tree and returns the new sha.
    pub fn commit(&self, message: &str) -> String {
        self.git(&["add", "-A"]);
        self.git(&["commit", "-q", "--allow-empty", "-m", message]);
        self.git(&["rev-parse", "HEAD"]).trim().to_owned()
    }
}

/// Vocabulary of `n` tokens `tok000`.. plus the specials.
pub fn vocab(n: usize) -> Vocabulary {
    let mut c = TokenCounts::new();
    for i in 0..n {
        c.add(&format!("tok{i:03}"), 10);
    }
    Vocabulary::from_counts(&c, 1, 1000).unwrap()
}

fn random_files(rng: &mut impl Rng, vocab_size: usize, files: usize, max_len: usize) -> Vec<Vec<u32>> {
    (0..files)
        .map(|_| {
            let len = rng.random_range(1..=max_len);
            (0..len)
                .map(|_| rng.random_range(SPECIALS.len() as u32..vocab_size as u32))
                .collect()
        })
        .collect()
}

/// Random encoded commits with alternating labels.
pub fn synthetic(n: usize, vocab_size: usize, seed: u64) -> Vec<EncodedCommit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let files = rng.random_range(1..=3);
            EncodedCommit {
                diff_files: random_files(&mut rng, vocab_size, files, 12),
                before_files: random_files(&mut rng, vocab_size, files, 12),
                after_files: random_files(&mut rng, vocab_size, files, 12),
                has_sources: true,
                label: if i % 2 == 0 {
                    Label::Security
                } else {
                    Label::NotSecurity
                },
            }
        })
        .collect()
}

const NEUTRAL_LINES: &[&str] = &[
    "int total = count + 1;",
    "items.add(next);",
    "return result.toString();",
    "String name = user.getName();",
    "if (list.isEmpty()) { return; }",
    "builder.append(value);",
    "for (int i = 0; i < n; i++) { sum += i; }",
    "map.put(key, value);",
];

const SECURITY_LINES: &[&str] = &[
    "input = Sanitizer.escapeHtml(input);",
    "if (!token.verify(secret)) { throw new SecurityException(); }",
    "path = Paths.get(base).resolve(path).normalize();",
];

const ROUTINE_LINES: &[&str] = &[
    "log.debug(\"refresh done\");",
    "cache.clear();",
    "metrics.increment(counter);",
];

/// A Java commit whose added lines reveal the label.
pub fn java_record(repo: &str, index: usize, label: Label, rng: &mut impl Rng) -> CommitRecord {
    let marker = if label.is_positive() {
        SECURITY_LINES
    } else {
        ROUTINE_LINES
    };
    let files = rng.random_range(1..=2);
    let files = (0..files)
        .map(|f| {
            let mut added: Vec<String> = (0..rng.random_range(1..=3))
                .map(|_| NEUTRAL_LINES[rng.random_range(0..NEUTRAL_LINES.len())].into())
                .collect();
            added.insert(
                rng.random_range(0..=added.len()),
                marker[rng.random_range(0..marker.len())].into(),
            );
            let removed: Vec<String> = vec![NEUTRAL_LINES[rng.random_range(0..NEUTRAL_LINES.len())].into()];
            let class = format!("C{index}F{f}");
            let before = format!(
                "class {class} {{\n  void run() {{\n    {}\n  }}\n}}\n",
                removed.join("\n    ")
            );
            let after = format!(
                "class {class} {{\n  void run() {{\n    {}\n  }}\n}}\n",
                added.join("\n    ")
            );
            FileChange {
                path: format!("src/{class}.java"),
                added_lines: added,
                removed_lines: removed,
                before_source: Some(before),
                after_source: Some(after),
            }
        })
        .collect();
    CommitRecord {
        repo: repo.to_owned(),
        sha: format!("{:040x}", rng.random::<u128>()),
        message: if label.is_positive() {
            "Fix vulnerability in input handling".into()
        } else {
            "Tidy up".into()
        },
        files,
        label,
        provenance: Provenance::GroundTruth,
    }
}

/// `per_repo` commits in each of `repos` repositories, half security-relevant.
pub fn java_corpus(repos: usize, per_repo: usize, seed: u64) -> Vec<CommitRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for r in 0..repos {
        for i in 0..per_repo {
            let label = if i % 2 == 0 {
                Label::Security
            } else {
                Label::NotSecurity
            };
            out.push(java_record(
                &format!("org/repo{r}"),
                r * per_repo + i,
                label,
                &mut rng,
            ));
        }
    }
    out
}

/// A model small enough to train in a test.
pub fn small_hcnn() -> csent::models::HcnnConfig {
    csent::models::HcnnConfig {
        embedding_dim: 16,
        window_sizes: vec![3, 5, 7],
        filters_per_window: 8,
        commit_window: 3,
        commit_filters: 16,
        hidden_dim: 16,
        ..Default::default()
    }
}

/// Trains `variant` for a few epochs on `train` and packages a checkpoint.
pub fn quick_checkpoint(
    variant: csent::models::Variant,
    train: &[CommitRecord],
    validation: &[CommitRecord],
    vocab: &Vocabulary,
    embeddings: Option<&csent::embed::EmbeddingMatrix>,
) -> csent::models::Checkpoint {
    use csent::dataset::FeatureConfig;
    use csent::models::{train as fit, Checkpoint, EmbeddingInit, ModelConfig, TrainConfig};
    let features = FeatureConfig::default();
    let encode = |rs: &[CommitRecord]| -> Vec<EncodedCommit> {
        rs.iter()
            .map(|r| EncodedCommit::new(r.code(), r.label, vocab, &features))
            .collect()
    };
    let config = if variant.is_neural() {
        let mut c = small_hcnn();
        if let Some(e) = embeddings {
            c.embedding_init = EmbeddingInit::PreTrained;
            c.embedding_dim = e.dim();
        }
        ModelConfig::Hcnn(c)
    } else {
        ModelConfig::default_for(variant)
    };
    let tc = TrainConfig {
        max_epochs: 3,
        patience: 3,
        seed: 5,
        class_weighting: false,
    };
    let (model, metadata) = fit(
        variant,
        &config,
        &encode(train),
        &encode(validation),
        &tc,
        vocab,
        embeddings,
    )
    .unwrap();
    Checkpoint {
        model,
        vocab: vocab.clone(),
        features,
        metadata,
    }
}

/// Vocabulary over every token the models could see in `records`.
pub fn corpus_vocab(records: &[CommitRecord]) -> Vocabulary {
    let features = csent::dataset::FeatureConfig::default();
    let mut counts = TokenCounts::new();
    for r in records {
        csent::dataset::features::count_commit_tokens(r.code(), &features, &mut counts);
    }
    Vocabulary::from_counts(&counts, 1, 10_000).unwrap()
}
