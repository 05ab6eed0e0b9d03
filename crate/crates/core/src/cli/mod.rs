//! The `csent` command line: ingest, mine, split, vocab, pretrain-embeddings,
//! train, evaluate, report and predict.
//!
//! Exit codes are 0 on success, 1 on runtime or data errors and 2 on usage
//! errors. Every error is one line on stderr starting with `error:`.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::models::Variant;

pub use config::RunConfig;

/// Worker threads for parallel ingestion, tokenization and evaluation.
pub const THREADS_VAR: &str = "CSENT_THREADS";

/// An invocation that cannot run as given: bad flags, config keys or values.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct UsageError(pub String);

#[derive(Debug, Parser)]
#[command(
    name = "csent",
    version,
    about = "Classify commits of Java projects as security-relevant or not"
)]
struct Cli {
    /// Settings file with `key = value` lines.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Overrides one setting; may be repeated.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read labelled commits from a local git clone into a JSONL dataset.
    Ingest(IngestArgs),
    /// Select commits whose message matches security patterns.
    Mine(MineArgs),
    /// Split a dataset into repository-disjoint train, validation and test sets.
    Split(SplitArgs),
    /// Build a token vocabulary from a dataset.
    Vocab(VocabArgs),
    /// Train CBOW token embeddings on a directory of Java sources.
    PretrainEmbeddings(PretrainArgs),
    /// Train a model variant and write a checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint on a dataset split.
    Evaluate(EvaluateArgs),
    /// Print a results table from evaluation summaries.
    Report(ReportArgs),
    /// Print the security-relevant probability of a patch.
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Local clone to read commits from.
    #[arg(long)]
    repo: PathBuf,
    /// Sha list: `<sha> [0|1]` per line.
    #[arg(long)]
    shas: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Repository name stored in records; defaults to the clone's directory name.
    #[arg(long)]
    repo_id: Option<String>,
    /// Label for sha lines that carry none.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
    label: u8,
}

#[derive(Debug, Args)]
struct MineArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// One regular expression per line; built-in patterns when omitted.
    #[arg(long)]
    patterns: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Datasets whose repositories are never mined (the evaluation projects).
    #[arg(long, num_args = 1..)]
    exclude: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[arg(long = "in", required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Train, validation and test fractions, e.g. `0.6,0.2,0.2`.
    #[arg(long)]
    ratios: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct VocabArgs {
    #[arg(long = "in", required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long)]
    min_count: Option<u64>,
    #[arg(long)]
    max_size: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PretrainArgs {
    /// Directory searched recursively for `.java` files.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Existing vocabulary to train over; otherwise one is built from the corpus.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Where a built vocabulary goes; defaults to `<out>.vocab`.
    #[arg(long, conflicts_with = "vocab")]
    vocab_out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    Variant::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Variant::ALL.iter().map(|v| v.as_str()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long, value_parser = parse_variant)]
    variant: Variant,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    val: PathBuf,
    /// Pre-trained embeddings; needs the vocabulary they were trained with.
    #[arg(long, requires = "vocab")]
    embeddings: Option<PathBuf>,
    /// Vocabulary file; otherwise one is built from the training split.
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    split: PathBuf,
    /// Summary JSON; per-record scores go next to it as `<stem>.scores.jsonl`.
    #[arg(long)]
    out: PathBuf,
    /// Split column of the results table; defaults to the split file's stem.
    #[arg(long)]
    split_name: Option<String>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long = "in", required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Also write the rows as JSON lines.
    #[arg(long)]
    jsonl: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    ckpt: PathBuf,
    /// Unified diff of one commit.
    #[arg(long)]
    diff: PathBuf,
    /// Source tree before the patch, for paired-code checkpoints.
    #[arg(long)]
    before: Option<PathBuf>,
    /// Source tree after the patch, for paired-code checkpoints.
    #[arg(long)]
    after: Option<PathBuf>,
}

fn configure_threads() -> Result<(), UsageError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| UsageError(format!("{THREADS_VAR} must be a positive integer, got `{raw}`")))?;
    // Fails only when a pool already exists, as with repeated in-process runs.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn load_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = commands::read_text(path)?;
        cfg.apply_text(&text)
            .map_err(|e| UsageError(format!("{}: {}", path.display(), e.0)))?;
    }
    for s in &cli.set {
        cfg.assign(s)?;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    configure_threads()?;
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Ingest(a) => commands::ingest(a, cfg),
        Command::Mine(a) => commands::mine(a, cfg),
        Command::Split(a) => commands::split(a, cfg),
        Command::Vocab(a) => commands::vocab(a, cfg),
        Command::PretrainEmbeddings(a) => commands::pretrain(a, cfg),
        Command::Train(a) => commands::train(a, cfg),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Report(a) => commands::report(a),
        Command::Predict(a) => commands::predict(a),
    }
}

/// Runs the command line given by `argv` (program name first) and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = if cli.verbose {
        log::LevelFilter::Info
    } else {
        log::LevelFilter::Warn
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            let line = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {line}");
            if e.is::<UsageError>() {
                2
            } else {
                1
            }
        }
    }
}
