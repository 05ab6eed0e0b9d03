//! Commit records: ingestion from git, unified-diff parsing, repo-disjoint
//! splits and regex mining of extra training commits.

mod diff;
pub mod features;
mod ingest;
mod jsonl;
mod mine;
mod split;

use std::path::PathBuf;

use thiserror::Error;

pub use diff::{parse_diff_entries, parse_unified_diff, DiffEntry};
pub use features::{DiffSides, EncodedCommit, FeatureConfig};
pub use ingest::{ingest_repository, list_candidate_shas, IngestOutcome, ShaSpec};
pub use jsonl::{from_jsonl, read_jsonl, to_jsonl, write_jsonl};
pub use mine::{mine_security_commits, PatternSet, DEFAULT_PATTERNS};
pub use split::{sample_negatives, split_by_repository, SplitSet};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("malformed diff at line {line}: {message}")]
    DiffFormat { line: usize, message: String },
    #[error("repository access failed: {0}")]
    RepoAccess(String),
    #[error("cannot split dataset: {0}")]
    Split(String),
    #[error("invalid pattern: {0}")]
    Pattern(#[from] regex::Error),
    #[error("dataset line {line}: {message}")]
    Jsonl { line: usize, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    NotSecurity = 0,
    Security = 1,
}

impl Label {
    pub fn from_bit(bit: u8) -> Option<Label> {
        match bit {
            0 => Some(Label::NotSecurity),
            1 => Some(Label::Security),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        self as u8
    }

    pub fn class_index(self) -> usize {
        self as usize
    }

    pub fn is_positive(self) -> bool {
        self == Label::Security
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    GroundTruth,
    Mined,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::GroundTruth => "ground-truth",
            Provenance::Mined => "mined",
        }
    }

    pub fn parse(s: &str) -> Option<Provenance> {
        match s {
            "ground-truth" => Some(Provenance::GroundTruth),
            "mined" => Some(Provenance::Mined),
            _ => None,
        }
    }
}

/// Changes to one Java file in a commit.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FileChange {
    pub path: String,
    pub added_lines: Vec<String>,
    pub removed_lines: Vec<String>,
    /// Full class text before the commit; `None` when the file did not exist.
    pub before_source: Option<String>,
    /// Full class text after the commit; `None` when the file was deleted.
    pub after_source: Option<String>,
}

impl FileChange {
    pub fn has_sources(&self) -> bool {
        self.before_source.is_some() || self.after_source.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitRecord {
    pub repo: String,
    pub sha: String,
    /// Only the miner reads this. Models see a commit through [`CommitCode`].
    pub message: String,
    pub files: Vec<FileChange>,
    pub label: Label,
    pub provenance: Provenance,
}

impl CommitRecord {
    /// The code-only view handed to feature extraction.
    pub fn code(&self) -> CommitCode<'_> {
        CommitCode { files: &self.files }
    }
}

/// What a model is allowed to see of a commit: the file changes, nothing else.
#[derive(Debug, Clone, Copy)]
pub struct CommitCode<'a> {
    pub files: &'a [FileChange],
}

pub(crate) fn is_java_path(path: &str) -> bool {
    path.ends_with(".java")
}
