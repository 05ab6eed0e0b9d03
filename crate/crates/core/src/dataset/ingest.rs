//! Commit ingestion from a local clone by shelling out to `git`.
//!
//! Commands used, all run as `git -C <workdir> ...`:
//!
//! * `rev-parse --git-dir` checks that the working directory is a repository.
//! * `rev-parse --verify --quiet <sha>^{commit}` resolves the sha.
//! * `rev-list --parents -n 1 <sha>` gives the first parent, if any.
//! * `log -1 --format=%B <sha>` gives the commit message.
//! * `diff --no-color --no-ext-diff -M <parent> <sha>` is the diff against the
//!   first parent; root commits use `diff-tree -p -M --root --no-commit-id
//!   --no-color <sha>` instead.
//! * `cat-file blob <rev>:<path>` reads each before/after blob.
//! * `rev-list --no-merges HEAD` lists candidate commits for negative sampling.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::diff::parse_diff_entries;
use super::{is_java_path, CommitRecord, DatasetError, FileChange, Label, Provenance};

/// A commit to ingest with its label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShaSpec {
    pub sha: String,
    pub label: Label,
}

impl ShaSpec {
    /// Parses a sha list: one `<sha> [0|1]` per line, `#` comments allowed.
    /// Lines without a label get `default_label`.
    pub fn parse_list(text: &str, default_label: Label) -> Result<Vec<ShaSpec>, DatasetError> {
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let sha = parts.next().unwrap_or_default().to_owned();
            let label = match parts.next() {
                None => default_label,
                Some(l) => {
                    l.parse::<u8>()
                        .ok()
                        .and_then(Label::from_bit)
                        .ok_or_else(|| DatasetError::Jsonl {
                            line: i + 1,
                            message: format!("label must be 0 or 1, got `{l}`"),
                        })?
                }
            };
            out.push(ShaSpec { sha, label });
        }
        Ok(out)
    }
}

#[derive(Debug, Default)]
pub struct IngestOutcome {
    pub records: Vec<CommitRecord>,
    /// Shas that touched no Java file.
    pub skipped: Vec<String>,
    /// Shas that could not be read, with the reason.
    pub failures: Vec<(String, DatasetError)>,
}

struct Git {
    workdir: PathBuf,
}

impl Git {
    fn run(&self, args: &[&str]) -> Result<Vec<u8>, DatasetError> {
        let out = Command::new("git")
            .arg("-C")
            .arg(&self.workdir)
            .args(args)
            .output()
            .map_err(|e| DatasetError::RepoAccess(format!("cannot run git: {e}")))?;
        if !out.status.success() {
            return Err(DatasetError::RepoAccess(format!(
                "`git {}` failed: {}",
                args.join(" "),
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        Ok(out.stdout)
    }

    fn text(&self, args: &[&str]) -> Result<String, DatasetError> {
        Ok(String::from_utf8_lossy(&self.run(args)?).into_owned())
    }
}

/// Reads the given commits from a local clone. Per-sha problems are
/// collected in [`IngestOutcome::failures`]; only an unusable clone is an error.
pub fn ingest_repository(
    workdir: &Path,
    repo_id: &str,
    shas: &[ShaSpec],
) -> Result<IngestOutcome, DatasetError> {
    let git = Git {
        workdir: workdir.to_owned(),
    };
    if !workdir.is_dir() {
        return Err(DatasetError::RepoAccess(format!(
            "{} is not a directory",
            workdir.display()
        )));
    }
    git.run(&["rev-parse", "--git-dir"])?;

    let results: Vec<(String, Result<Option<CommitRecord>, DatasetError>)> = shas
        .par_iter()
        .map(|spec| (spec.sha.clone(), ingest_commit(&git, repo_id, spec)))
        .collect();

    let mut outcome = IngestOutcome::default();
    for (sha, result) in results {
        match result {
            Ok(Some(record)) => outcome.records.push(record),
            Ok(None) => outcome.skipped.push(sha),
            Err(e) => outcome.failures.push((sha, e)),
        }
    }
    Ok(outcome)
}

fn ingest_commit(git: &Git, repo_id: &str, spec: &ShaSpec) -> Result<Option<CommitRecord>, DatasetError> {
    let sha = git
        .text(&[
            "rev-parse",
            "--verify",
            "--quiet",
            &format!("{}^{{commit}}", spec.sha),
        ])
        .map_err(|_| DatasetError::RepoAccess(format!("unknown commit {}", spec.sha)))?
        .trim()
        .to_owned();
    let parents = git.text(&["rev-list", "--parents", "-n", "1", &sha])?;
    let parent = parents.split_whitespace().nth(1).map(str::to_owned);
    let message = git
        .text(&["log", "-1", "--format=%B", &sha])?
        .trim_end()
        .to_owned();
    let diff = match &parent {
        Some(p) => git.text(&["diff", "--no-color", "--no-ext-diff", "-M", p, &sha])?,
        None => git.text(&[
            "diff-tree",
            "-p",
            "-M",
            "--root",
            "--no-commit-id",
            "--no-color",
            &sha,
        ])?,
    };

    let mut files = Vec::new();
    for entry in parse_diff_entries(&diff)? {
        let Some(path) = entry.path().map(str::to_owned) else {
            continue;
        };
        if !is_java_path(&path) {
            continue;
        }
        let before_source = match (&parent, &entry.old_path) {
            (Some(p), Some(old)) => Some(git.text(&["cat-file", "blob", &format!("{p}:{old}")])?),
            _ => None,
        };
        let after_source = match &entry.new_path {
            Some(new) => Some(git.text(&["cat-file", "blob", &format!("{sha}:{new}")])?),
            None => None,
        };
        if entry.added_lines.is_empty()
            && entry.removed_lines.is_empty()
            && (before_source.is_none() || after_source.is_none())
        {
            continue;
        }
        files.push(FileChange {
            path,
            added_lines: entry.added_lines,
            removed_lines: entry.removed_lines,
            before_source,
            after_source,
        });
    }
    if files.is_empty() {
        return Ok(None);
    }
    Ok(Some(CommitRecord {
        repo: repo_id.to_owned(),
        sha,
        message,
        files,
        label: spec.label,
        provenance: Provenance::GroundTruth,
    }))
}

/// Non-merge commits reachable from HEAD, excluding `exclude`, in a
/// seed-determined random order.
pub fn list_candidate_shas(
    workdir: &Path,
    exclude: &HashSet<String>,
    seed: u64,
) -> Result<Vec<String>, DatasetError> {
    let git = Git {
        workdir: workdir.to_owned(),
    };
    let mut shas: Vec<String> = git
        .text(&["rev-list", "--no-merges", "HEAD"])?
        .lines()
        .map(str::to_owned)
        .filter(|s| !exclude.contains(s))
        .collect();
    shas.sort();
    shas.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(shas)
}
