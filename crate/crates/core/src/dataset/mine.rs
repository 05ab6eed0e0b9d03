use std::collections::HashSet;

use regex::{Regex, RegexBuilder};

use super::{CommitRecord, DatasetError, Label, Provenance};

/// Default commit-message patterns for mining security fixes.
pub const DEFAULT_PATTERNS: &[&str] = &[
    r"vulnerab",
    r"security",
    r"\bCVE-\d{4}-\d+\b",
    r"\bXSS\b",
    r"\bCSRF\b",
    r"denial of service",
    r"remote code execution",
    r"\bRCE\b",
    r"buffer overflow",
    r"injection",
    r"directory traversal",
];

/// Case-insensitive commit-message patterns.
#[derive(Debug, Clone)]
pub struct PatternSet {
    patterns: Vec<Regex>,
}

impl Default for PatternSet {
    fn default() -> Self {
        Self::new(DEFAULT_PATTERNS.iter().copied()).expect("default patterns compile")
    }
}

impl PatternSet {
    pub fn new<'a>(patterns: impl IntoIterator<Item = &'a str>) -> Result<Self, DatasetError> {
        let patterns = patterns
            .into_iter()
            .map(|p| RegexBuilder::new(p).case_insensitive(true).build())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PatternSet { patterns })
    }

    /// One pattern per line; blank lines and `#` comments are ignored.
    pub fn parse_file(text: &str) -> Result<Self, DatasetError> {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn is_match(&self, message: &str) -> bool {
        self.patterns.iter().any(|p| p.is_match(message))
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }
}

/// Returns the records whose message matches, relabeled as mined security
/// fixes. Records from `excluded_repos` (the evaluation projects) are dropped.
pub fn mine_security_commits(
    records: &[CommitRecord],
    patterns: &PatternSet,
    excluded_repos: &HashSet<String>,
) -> Vec<CommitRecord> {
    records
        .iter()
        .filter(|r| !excluded_repos.contains(&r.repo) && patterns.is_match(&r.message))
        .map(|r| CommitRecord {
            label: Label::Security,
            provenance: Provenance::Mined,
            ..r.clone()
        })
        .collect()
}
