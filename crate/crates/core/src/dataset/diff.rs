use std::sync::LazyLock;

use regex::Regex;

use super::{is_java_path, DatasetError, FileChange};

static HUNK_HEADER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@").unwrap());

/// One file section of a unified diff, before the Java filter is applied.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DiffEntry {
    /// `None` for `/dev/null` (file created).
    pub old_path: Option<String>,
    /// `None` for `/dev/null` (file deleted).
    pub new_path: Option<String>,
    pub added_lines: Vec<String>,
    pub removed_lines: Vec<String>,
}

impl DiffEntry {
    /// Post-rename path, or the old path for deletions.
    pub fn path(&self) -> Option<&str> {
        self.new_path.as_deref().or(self.old_path.as_deref())
    }
}

/// Parses a unified diff into one [`FileChange`] per modified `.java` file.
pub fn parse_unified_diff(text: &str) -> Result<Vec<FileChange>, DatasetError> {
    Ok(parse_diff_entries(text)?
        .into_iter()
        .filter_map(|e| {
            let path = e.path()?.to_owned();
            if !is_java_path(&path) || (e.added_lines.is_empty() && e.removed_lines.is_empty()) {
                return None;
            }
            Some(FileChange {
                path,
                added_lines: e.added_lines,
                removed_lines: e.removed_lines,
                before_source: None,
                after_source: None,
            })
        })
        .collect())
}

fn strip_prefix_path(raw: &str) -> Option<String> {
    // `--- a/foo.java\t2019-01-01 ...` carries an optional timestamp.
    let raw = raw.split('\t').next().unwrap_or(raw).trim_end();
    let raw = raw
        .strip_prefix('"')
        .and_then(|r| r.strip_suffix('"'))
        .unwrap_or(raw);
    if raw == "/dev/null" {
        return None;
    }
    let path = raw
        .strip_prefix("a/")
        .or_else(|| raw.strip_prefix("b/"))
        .unwrap_or(raw);
    Some(path.to_owned())
}

fn git_header_paths(rest: &str) -> (Option<String>, Option<String>) {
    match rest.rfind(" b/") {
        Some(idx) => (
            strip_prefix_path(&rest[..idx]),
            strip_prefix_path(&rest[idx + 1..]),
        ),
        None => (None, None),
    }
}

/// Parses every file section of a unified diff, Java or not.
pub fn parse_diff_entries(text: &str) -> Result<Vec<DiffEntry>, DatasetError> {
    let lines: Vec<&str> = text
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect();
    let mut entries: Vec<DiffEntry> = Vec::new();
    // Whether the current entry was opened by `diff --git` and has not yet
    // seen its `---` header.
    let mut awaiting_minus = false;
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        let lineno = i + 1;
        if let Some(rest) = line.strip_prefix("diff --git ") {
            let (old_path, new_path) = git_header_paths(rest);
            entries.push(DiffEntry {
                old_path,
                new_path,
                ..Default::default()
            });
            awaiting_minus = true;
        } else if let Some(rest) = line.strip_prefix("rename from ") {
            if let Some(e) = entries.last_mut() {
                e.old_path = Some(rest.to_owned());
            }
        } else if let Some(rest) = line.strip_prefix("rename to ") {
            if let Some(e) = entries.last_mut() {
                e.new_path = Some(rest.to_owned());
            }
        } else if line.starts_with("new file mode") {
            if let Some(e) = entries.last_mut() {
                e.old_path = None;
            }
        } else if line.starts_with("deleted file mode") {
            if let Some(e) = entries.last_mut() {
                e.new_path = None;
            }
        } else if let Some(rest) = line.strip_prefix("--- ") {
            if lines.get(i + 1).is_some_and(|l| l.starts_with("+++ ")) {
                let old_path = strip_prefix_path(rest);
                let new_path = strip_prefix_path(&lines[i + 1][4..]);
                if !awaiting_minus {
                    entries.push(DiffEntry::default());
                }
                let e = entries.last_mut().expect("entry exists");
                e.old_path = old_path;
                e.new_path = new_path;
                awaiting_minus = false;
                i += 1;
            }
        } else if line.starts_with("@@") {
            let Some(entry) = entries.last_mut() else {
                return Err(DatasetError::DiffFormat {
                    line: lineno,
                    message: "hunk before any file header".into(),
                });
            };
            awaiting_minus = false;
            i = parse_hunk(&lines, i, entry)?;
            continue;
        }
        i += 1;
    }
    Ok(entries)
}

/// Consumes the hunk starting at `start`; returns the index of the first line after it.
fn parse_hunk(lines: &[&str], start: usize, entry: &mut DiffEntry) -> Result<usize, DatasetError> {
    let header = lines[start];
    let bad_header = || DatasetError::DiffFormat {
        line: start + 1,
        message: format!("bad hunk header `{header}`"),
    };
    let caps = HUNK_HEADER.captures(header).ok_or_else(bad_header)?;
    let count = |idx: usize| -> Result<usize, DatasetError> {
        caps.get(idx)
            .map_or(Ok(1), |m| m.as_str().parse().map_err(|_| bad_header()))
    };
    let mut old_left = count(2)?;
    let mut new_left = count(4)?;

    let mut i = start + 1;
    while old_left > 0 || new_left > 0 {
        let Some(&line) = lines.get(i) else {
            return Err(DatasetError::DiffFormat {
                line: i,
                message: "diff ended inside a hunk".into(),
            });
        };
        let short = || DatasetError::DiffFormat {
            line: i + 1,
            message: "hunk shorter than its header claims".into(),
        };
        match line.as_bytes().first() {
            Some(b'+') => {
                new_left = new_left.checked_sub(1).ok_or_else(short)?;
                entry.added_lines.push(line[1..].to_owned());
            }
            Some(b'-') => {
                old_left = old_left.checked_sub(1).ok_or_else(short)?;
                entry.removed_lines.push(line[1..].to_owned());
            }
            // Some tools strip the single space from blank context lines.
            Some(b' ') | None => {
                old_left = old_left.checked_sub(1).ok_or_else(short)?;
                new_left = new_left.checked_sub(1).ok_or_else(short)?;
            }
            Some(b'\\') => {}
            Some(_) => return Err(short()),
        }
        i += 1;
    }
    while lines.get(i).is_some_and(|l| l.starts_with('\\')) {
        i += 1;
    }
    Ok(i)
}
