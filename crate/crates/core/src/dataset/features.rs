//! Turns the code of a commit into token sequences.
//!
//! Diff files become `<ADD> added-tokens... <DEL> removed-tokens...`; a flat
//! commit stream joins files with `<SEP>`. Paired inputs are the token
//! streams of each file's full before and after source.

use serde::{Deserialize, Serialize};

use crate::lex::{self, TokenCounts, Vocabulary, ADD, DEL, SEP};

use super::{CommitCode, Label};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiffSides {
    #[serde(rename = "both")]
    Both,
    #[serde(rename = "added")]
    AddedOnly,
}

impl DiffSides {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "both" => Some(DiffSides::Both),
            "added" => Some(DiffSides::AddedOnly),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DiffSides::Both => "both",
            DiffSides::AddedOnly => "added",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub max_files: usize,
    pub max_tokens_per_side: usize,
    pub sides: DiffSides,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            max_files: 16,
            max_tokens_per_side: 2000,
            sides: DiffSides::Both,
        }
    }
}

/// Javadoc continuation lines (`* foo`, `*/`) show up in hunks without their
/// opening `/*`; they are comment text and never code.
fn is_comment_continuation(line: &str) -> bool {
    let t = line.trim_start();
    t == "*" || t.starts_with("* ") || t.starts_with("*/") || t.starts_with("*\t")
}

fn lines_tokens(lines: &[String], cap: usize) -> Vec<String> {
    let text: Vec<&str> = lines
        .iter()
        .map(String::as_str)
        .filter(|l| !is_comment_continuation(l))
        .collect();
    let mut toks: Vec<String> = lex::tokenize_lenient(&text.join("\n"))
        .tokens
        .into_iter()
        .map(|t| t.text)
        .collect();
    toks.truncate(cap);
    toks
}

pub fn source_tokens(source: Option<&str>, cfg: &FeatureConfig) -> Vec<String> {
    let mut toks: Vec<String> = lex::tokenize_lenient(source.unwrap_or(""))
        .tokens
        .into_iter()
        .map(|t| t.text)
        .collect();
    toks.truncate(cfg.max_tokens_per_side);
    toks
}

/// Diff tokens of each file, at most `max_files` of them.
pub fn diff_tokens(code: CommitCode<'_>, cfg: &FeatureConfig) -> Vec<Vec<String>> {
    code.files
        .iter()
        .take(cfg.max_files)
        .map(|f| {
            let mut toks = vec![ADD.to_owned()];
            toks.extend(lines_tokens(&f.added_lines, cfg.max_tokens_per_side));
            if cfg.sides == DiffSides::Both {
                toks.push(DEL.to_owned());
                toks.extend(lines_tokens(&f.removed_lines, cfg.max_tokens_per_side));
            }
            toks
        })
        .collect()
}

/// All diff tokens of a commit as one stream, files separated by `<SEP>`.
pub fn flat_diff_tokens(code: CommitCode<'_>, cfg: &FeatureConfig) -> Vec<String> {
    let mut out = Vec::new();
    for (i, file) in diff_tokens(code, cfg).into_iter().enumerate() {
        if i > 0 {
            out.push(SEP.to_owned());
        }
        out.extend(file);
    }
    out
}

/// Before and after source tokens per file.
pub fn paired_tokens(code: CommitCode<'_>, cfg: &FeatureConfig) -> (Vec<Vec<String>>, Vec<Vec<String>>) {
    code.files
        .iter()
        .take(cfg.max_files)
        .map(|f| {
            (
                source_tokens(f.before_source.as_deref(), cfg),
                source_tokens(f.after_source.as_deref(), cfg),
            )
        })
        .unzip()
}

/// Counts every token a model could see for this commit.
pub fn count_commit_tokens(code: CommitCode<'_>, cfg: &FeatureConfig, counts: &mut TokenCounts) {
    for file in diff_tokens(code, cfg) {
        for t in file {
            counts.add(&t, 1);
        }
    }
    let (before, after) = paired_tokens(code, cfg);
    for t in before.iter().chain(&after).flatten() {
        counts.add(t, 1);
    }
}

/// A commit as vocabulary ids, ready for any model variant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedCommit {
    pub diff_files: Vec<Vec<u32>>,
    pub before_files: Vec<Vec<u32>>,
    pub after_files: Vec<Vec<u32>>,
    /// Whether any file carried a before or after source.
    pub has_sources: bool,
    pub label: Label,
}

impl EncodedCommit {
    pub fn new(code: CommitCode<'_>, label: Label, vocab: &Vocabulary, cfg: &FeatureConfig) -> Self {
        let encode = |files: Vec<Vec<String>>| -> Vec<Vec<u32>> {
            files
                .iter()
                .map(|f| vocab.encode_texts(f.iter().map(String::as_str)))
                .collect()
        };
        let (before, after) = paired_tokens(code, cfg);
        EncodedCommit {
            diff_files: encode(diff_tokens(code, cfg)),
            before_files: encode(before),
            after_files: encode(after),
            has_sources: code.files.iter().take(cfg.max_files).any(|f| f.has_sources()),
            label,
        }
    }

    /// Distinct ids over all diff files, for the one-hot baseline.
    pub fn diff_token_set(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.diff_files.iter().flatten().copied().collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FileChange;

    fn change(added: &[&str], removed: &[&str]) -> FileChange {
        FileChange {
            path: "A.java".into(),
            added_lines: added.iter().map(|s| s.to_string()).collect(),
            removed_lines: removed.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    #[test]
    fn add_del_sep_policy() {
        let files = vec![change(&["int x = 1;"], &["x++;"]), change(&["y();"], &[])];
        let code = CommitCode { files: &files };
        let flat = flat_diff_tokens(code, &FeatureConfig::default());
        assert_eq!(
            flat,
            [
                "<ADD>", "int", "x", "=", "<NUM>", ";", "<DEL>", "x", "++", ";", "<SEP>", "<ADD>", "y", "(",
                ")", ";", "<DEL>"
            ]
        );
        let added_only = FeatureConfig {
            sides: DiffSides::AddedOnly,
            ..Default::default()
        };
        assert_eq!(
            diff_tokens(code, &added_only)[0],
            ["<ADD>", "int", "x", "=", "<NUM>", ";"]
        );
    }

    #[test]
    fn javadoc_fragments_dropped() {
        let files = vec![change(
            &["   * @param secret the CVE fix", "   */", "run();"],
            &[],
        )];
        let toks = diff_tokens(CommitCode { files: &files }, &FeatureConfig::default());
        assert_eq!(toks[0], ["<ADD>", "run", "(", ")", ";", "<DEL>"]);
    }

    #[test]
    fn caps_apply() {
        let many: Vec<FileChange> = (0..20).map(|_| change(&["a b c d e"], &[])).collect();
        let cfg = FeatureConfig {
            max_files: 16,
            max_tokens_per_side: 3,
            sides: DiffSides::Both,
        };
        let toks = diff_tokens(CommitCode { files: &many }, &cfg);
        assert_eq!(toks.len(), 16);
        assert_eq!(toks[0], ["<ADD>", "a", "b", "c", "<DEL>"]);
    }

    #[test]
    fn encoded_commit() {
        let mut f = change(&["a a b"], &[]);
        f.after_source = Some("class A {}".into());
        let files = vec![f];
        let code = CommitCode { files: &files };
        let mut counts = TokenCounts::new();
        count_commit_tokens(code, &FeatureConfig::default(), &mut counts);
        assert_eq!(counts.get("a"), 2);
        assert_eq!(counts.get("class"), 1);
        let vocab = Vocabulary::from_counts(&counts, 1, 100).unwrap();
        let enc = EncodedCommit::new(code, Label::Security, &vocab, &FeatureConfig::default());
        assert!(enc.has_sources);
        assert!(enc.before_files[0].is_empty());
        assert_eq!(enc.after_files[0].len(), 4);
        assert_eq!(enc.diff_token_set().len(), 4);
    }
}
