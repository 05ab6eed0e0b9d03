use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use walkdir::WalkDir;

use crate::dataset::features::count_commit_tokens;
use crate::dataset::{
    ingest_repository, list_candidate_shas, mine_security_commits, read_jsonl, split_by_repository, to_jsonl,
    CommitCode, CommitRecord, EncodedCommit, FeatureConfig, FileChange, Label, PatternSet, ShaSpec,
    DEFAULT_PATTERNS,
};
use crate::embed::{load_embeddings, save_embeddings, train_cbow};
use crate::eval::{self, read_rows, render_jsonl, render_table};
use crate::lex::{tokenize_lenient, TokenCounts, TokenStream, Vocabulary};
use crate::models::{
    load_checkpoint, save_checkpoint, train as train_model, Checkpoint, EmbeddingInit, ModelConfig,
};

use super::{
    EvaluateArgs, IngestArgs, MineArgs, PredictArgs, PretrainArgs, ReportArgs, RunConfig, SplitArgs,
    TrainArgs, UsageError, VocabArgs,
};

pub(super) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn records(path: &Path) -> Result<Vec<CommitRecord>> {
    read_jsonl(path).with_context(|| format!("reading {}", path.display()))
}

fn records_from(paths: &[PathBuf]) -> Result<Vec<CommitRecord>> {
    let mut out = Vec::new();
    for p in paths {
        out.extend(records(p)?);
    }
    Ok(out)
}

fn output_dir(file: &Path) -> PathBuf {
    match file.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_owned(),
        _ => PathBuf::from("."),
    }
}

/// Echoes the effective settings into an output directory.
fn echo_config(dir: &Path, cfg: &RunConfig, command: &str) -> Result<()> {
    write_file(&dir.join("run-config.txt"), cfg.to_text(command))
}

pub(super) fn ingest(args: IngestArgs, cfg: RunConfig) -> Result<()> {
    let (ratio, seed) = cfg.negative_sampling()?;
    let label = Label::from_bit(args.label).expect("clap limits the range");
    let specs = ShaSpec::parse_list(&read_text(&args.shas)?, label)
        .with_context(|| format!("sha list {}", args.shas.display()))?;
    let repo_id = match args.repo_id {
        Some(id) => id,
        None => {
            let full = args
                .repo
                .canonicalize()
                .with_context(|| format!("cannot open {}", args.repo.display()))?;
            full.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "repo".into())
        }
    };
    let outcome = ingest_repository(&args.repo, &repo_id, &specs)?;
    for (sha, e) in &outcome.failures {
        log::warn!("{sha}: {e}");
    }
    if outcome.records.is_empty() && !outcome.failures.is_empty() {
        bail!("none of the {} commits could be read", specs.len());
    }
    let mut out = outcome.records;
    let (skipped, failed) = (outcome.skipped.len(), outcome.failures.len());

    let positives = out.iter().filter(|r| r.label == Label::Security).count();
    let wanted = (ratio * positives as f64).round() as usize;
    if wanted > 0 {
        let mut exclude: HashSet<String> = specs.iter().map(|s| s.sha.clone()).collect();
        exclude.extend(out.iter().map(|r| r.sha.clone()));
        let candidates = list_candidate_shas(&args.repo, &exclude, seed)?;
        let mut negatives = Vec::new();
        for chunk in candidates.chunks(wanted.max(8)) {
            let specs: Vec<ShaSpec> = chunk
                .iter()
                .map(|sha| ShaSpec {
                    sha: sha.clone(),
                    label: Label::NotSecurity,
                })
                .collect();
            negatives.extend(ingest_repository(&args.repo, &repo_id, &specs)?.records);
            if negatives.len() >= wanted {
                break;
            }
        }
        negatives.truncate(wanted);
        if negatives.len() < wanted {
            log::warn!("only {} of {wanted} negative commits found", negatives.len());
        }
        out.extend(negatives);
    }

    write_file(&args.out, to_jsonl(&out))?;
    echo_config(&output_dir(&args.out), &cfg, "ingest")?;
    println!(
        "ingested {} commits ({skipped} without Java changes, {failed} unreadable)",
        out.len()
    );
    Ok(())
}

pub(super) fn mine(args: MineArgs, cfg: RunConfig) -> Result<()> {
    let input = records(&args.input)?;
    let patterns = match &args.patterns {
        Some(p) => {
            PatternSet::parse_file(&read_text(p)?).with_context(|| format!("patterns {}", p.display()))?
        }
        None => PatternSet::new(DEFAULT_PATTERNS.iter().copied())?,
    };
    let excluded: HashSet<String> = records_from(&args.exclude)?.into_iter().map(|r| r.repo).collect();
    let mined = mine_security_commits(&input, &patterns, &excluded);
    write_file(&args.out, to_jsonl(&mined))?;
    echo_config(&output_dir(&args.out), &cfg, "mine")?;
    println!("mined {} of {} commits", mined.len(), input.len());
    Ok(())
}

pub(super) fn split(args: SplitArgs, mut cfg: RunConfig) -> Result<()> {
    if let Some(r) = &args.ratios {
        cfg.set("split.ratios", r)?;
    }
    if let Some(s) = args.seed {
        cfg.set("split.seed", &s.to_string())?;
    }
    let (ratios, seed) = cfg.split()?;
    let set = split_by_repository(records_from(&args.input)?, ratios, seed)?;
    for (name, part) in [
        ("train", &set.train),
        ("validation", &set.validation),
        ("test", &set.test),
    ] {
        write_file(&args.out_dir.join(format!("{name}.jsonl")), to_jsonl(part))?;
    }
    echo_config(&args.out_dir, &cfg, "split")?;
    println!(
        "train {}, validation {}, test {}",
        set.train.len(),
        set.validation.len(),
        set.test.len()
    );
    Ok(())
}

fn count_tokens(records: &[CommitRecord], features: &FeatureConfig) -> TokenCounts {
    records
        .par_iter()
        .fold(TokenCounts::new, |mut counts, r| {
            count_commit_tokens(r.code(), features, &mut counts);
            counts
        })
        .reduce(TokenCounts::new, |mut a, b| {
            a.merge(b);
            a
        })
}

fn build_vocab(records: &[CommitRecord], cfg: &RunConfig) -> Result<Vocabulary> {
    let (min_count, max_size) = cfg.vocab_params()?;
    Ok(Vocabulary::from_counts(
        &count_tokens(records, &cfg.features()?),
        min_count,
        max_size,
    )?)
}

fn save_vocab(path: &Path, vocab: &Vocabulary) -> Result<()> {
    write_file(path, vocab.to_text())
}

fn load_vocab(path: &Path) -> Result<Vocabulary> {
    Vocabulary::from_text(&read_text(path)?).with_context(|| format!("vocabulary {}", path.display()))
}

pub(super) fn vocab(args: VocabArgs, mut cfg: RunConfig) -> Result<()> {
    if let Some(n) = args.min_count {
        cfg.set("vocab.min_count", &n.to_string())?;
    }
    if let Some(n) = args.max_size {
        cfg.set("vocab.max_size", &n.to_string())?;
    }
    let vocab = build_vocab(&records_from(&args.input)?, &cfg)?;
    save_vocab(&args.out, &vocab)?;
    echo_config(&output_dir(&args.out), &cfg, "vocab")?;
    println!("{} tokens, fingerprint {}", vocab.len(), vocab.fingerprint());
    Ok(())
}

fn java_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        bail!("{} is not a directory", dir.display());
    }
    let mut out = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.with_context(|| format!("walking {}", dir.display()))?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|e| e == "java") {
            out.push(entry.into_path());
        }
    }
    Ok(out)
}

pub(super) fn pretrain(args: PretrainArgs, mut cfg: RunConfig) -> Result<()> {
    if let Some(s) = args.seed {
        cfg.set("cbow.seed", &s.to_string())?;
    }
    let cbow = cfg.cbow()?;
    let files = java_files(&args.corpus)?;
    if files.is_empty() {
        bail!("no .java files under {}", args.corpus.display());
    }
    let streams: Vec<TokenStream> = files
        .par_iter()
        .map(|p| {
            let bytes = fs::read(p).with_context(|| format!("cannot read {}", p.display()))?;
            Ok(tokenize_lenient(&String::from_utf8_lossy(&bytes)))
        })
        .collect::<Result<_>>()?;
    let vocab = match &args.vocab {
        Some(p) => load_vocab(p)?,
        None => {
            let (min_count, max_size) = cfg.vocab_params()?;
            let mut counts = TokenCounts::new();
            for s in &streams {
                counts.add_stream(s);
            }
            let vocab = Vocabulary::from_counts(&counts, min_count, max_size)?;
            let path = args.vocab_out.clone().unwrap_or_else(|| {
                let mut p = args.out.clone().into_os_string();
                p.push(".vocab");
                p.into()
            });
            save_vocab(&path, &vocab)?;
            vocab
        }
    };
    let corpus: Vec<Vec<u32>> = streams.iter().map(|s| vocab.encode(s)).collect();
    let matrix = train_cbow(&corpus, &vocab, &cbow)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    save_embeddings(&args.out, &matrix, &vocab)?;
    echo_config(&output_dir(&args.out), &cfg, "pretrain-embeddings")?;
    println!(
        "{} files, {} tokens, {} x {} embeddings",
        files.len(),
        corpus.iter().map(Vec::len).sum::<usize>(),
        matrix.rows(),
        matrix.dim()
    );
    Ok(())
}

fn encode_all(records: &[CommitRecord], vocab: &Vocabulary, features: &FeatureConfig) -> Vec<EncodedCommit> {
    records
        .par_iter()
        .map(|r| EncodedCommit::new(r.code(), r.label, vocab, features))
        .collect()
}

pub(super) fn train(args: TrainArgs, mut cfg: RunConfig) -> Result<()> {
    if let Some(s) = args.seed {
        cfg.set("train.seed", &s.to_string())?;
    }
    if args.embeddings.is_some() && !args.variant.is_neural() {
        return Err(UsageError(format!("{} does not use embeddings", args.variant)).into());
    }
    let features = cfg.features()?;
    let train_records = records(&args.train)?;
    let val_records = records(&args.val)?;
    let vocab = match &args.vocab {
        Some(p) => load_vocab(p)?,
        None => build_vocab(&train_records, &cfg)?,
    };
    let embeddings = match &args.embeddings {
        Some(p) => {
            let m = load_embeddings(p, &vocab).with_context(|| format!("embeddings {}", p.display()))?;
            cfg.set("hcnn.embedding_dim", &m.dim().to_string())?;
            Some(m)
        }
        None => None,
    };
    let model_config = if args.variant.is_neural() {
        let init = if embeddings.is_some() {
            EmbeddingInit::PreTrained
        } else {
            EmbeddingInit::Random
        };
        ModelConfig::Hcnn(cfg.hcnn(init)?)
    } else {
        ModelConfig::Lr(cfg.lr()?)
    };
    model_config.validate().map_err(|e| UsageError(e.to_string()))?;
    let train_config = cfg.train()?;

    let train_set = encode_all(&train_records, &vocab, &features);
    let val_set = encode_all(&val_records, &vocab, &features);
    let (model, metadata) = train_model(
        args.variant,
        &model_config,
        &train_set,
        &val_set,
        &train_config,
        &vocab,
        embeddings.as_ref(),
    )?;
    let summary = format!(
        "trained {}: best epoch {} of {}, validation F1 {:.3}",
        args.variant, metadata.best_epoch, metadata.epochs_run, metadata.best_validation_f1
    );
    let ckpt = Checkpoint {
        model,
        vocab,
        features,
        metadata,
    };
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    save_checkpoint(&args.out, &ckpt)?;
    echo_config(&output_dir(&args.out), &cfg, "train")?;
    println!("{summary}");
    Ok(())
}

pub(super) fn evaluate(args: EvaluateArgs) -> Result<()> {
    let ckpt = load_checkpoint(&args.ckpt).with_context(|| format!("checkpoint {}", args.ckpt.display()))?;
    let split = records(&args.split)?;
    let result = eval::evaluate(&ckpt, &split)?;
    let split_name = args.split_name.clone().unwrap_or_else(|| {
        args.split
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "split".into())
    });
    let row = eval::result_row(&ckpt, &split_name, &result.metrics);
    let summary = serde_json::json!({
        "input-features": row.input_features,
        "model": row.model,
        "embedding": row.embedding,
        "split": row.split,
        "variant": ckpt.variant().as_str(),
        "records": split.len(),
        "metrics": result.metrics,
    });
    write_file(&args.out, serde_json::to_string_pretty(&summary)? + "\n")?;
    let scores: String = result
        .scores
        .iter()
        .map(|s| serde_json::to_string(s).map(|l| l + "\n"))
        .collect::<Result<_, _>>()?;
    write_file(&args.out.with_extension("scores.jsonl"), scores)?;
    print!("{}", render_table(&[row]));
    Ok(())
}

pub(super) fn report(args: ReportArgs) -> Result<()> {
    let mut rows = Vec::new();
    for p in &args.input {
        rows.extend(read_rows(&read_text(p)?).with_context(|| format!("summary {}", p.display()))?);
    }
    if let Some(out) = &args.jsonl {
        write_file(out, render_jsonl(&rows))?;
    }
    print!("{}", render_table(&rows));
    Ok(())
}

/// File text under `root` at `path`; `None` when the file is absent there.
fn source_in(root: Option<&Path>, path: &str) -> Result<Option<String>> {
    let Some(root) = root else { return Ok(None) };
    let full = root.join(path);
    if !full.is_file() {
        return Ok(None);
    }
    let bytes = fs::read(&full).with_context(|| format!("cannot read {}", full.display()))?;
    Ok(Some(String::from_utf8_lossy(&bytes).into_owned()))
}

pub(super) fn predict(args: PredictArgs) -> Result<()> {
    let ckpt = load_checkpoint(&args.ckpt).with_context(|| format!("checkpoint {}", args.ckpt.display()))?;
    let patch = read_text(&args.diff)?;
    let mut files: Vec<FileChange> = crate::dataset::parse_unified_diff(&patch)
        .with_context(|| format!("patch {}", args.diff.display()))?;
    if files.is_empty() {
        bail!("{} changes no Java file", args.diff.display());
    }
    if ckpt.variant().is_paired() && args.before.is_none() && args.after.is_none() {
        log::warn!("paired-code checkpoint without --before/--after sees empty sources");
    }
    for f in &mut files {
        f.before_source = source_in(args.before.as_deref(), &f.path)?;
        f.after_source = source_in(args.after.as_deref(), &f.path)?;
    }
    let encoded = EncodedCommit::new(
        CommitCode { files: &files },
        Label::NotSecurity,
        &ckpt.vocab,
        &ckpt.features,
    );
    let p = ckpt.model.predict(&encoded)?;
    println!("security_relevant_probability={:.6}", p.probability_security);
    Ok(())
}
