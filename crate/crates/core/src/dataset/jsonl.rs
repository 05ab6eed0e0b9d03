use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{CommitRecord, DatasetError, FileChange, Label, Provenance};

const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    v: u32,
    repo: String,
    sha: String,
    message: String,
    label: u8,
    provenance: String,
    files: Vec<FileLine>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileLine {
    path: String,
    added: Vec<String>,
    removed: Vec<String>,
    before: Option<String>,
    after: Option<String>,
}

impl From<&CommitRecord> for RecordLine {
    fn from(r: &CommitRecord) -> Self {
        RecordLine {
            v: FORMAT_VERSION,
            repo: r.repo.clone(),
            sha: r.sha.clone(),
            message: r.message.clone(),
            label: r.label.bit(),
            provenance: r.provenance.as_str().to_owned(),
            files: r
                .files
                .iter()
                .map(|f| FileLine {
                    path: f.path.clone(),
                    added: f.added_lines.clone(),
                    removed: f.removed_lines.clone(),
                    before: f.before_source.as_ref().map(|s| BASE64.encode(s)),
                    after: f.after_source.as_ref().map(|s| BASE64.encode(s)),
                })
                .collect(),
        }
    }
}

impl RecordLine {
    fn into_record(self, line: usize) -> Result<CommitRecord, DatasetError> {
        let err = |message: String| DatasetError::Jsonl { line, message };
        if self.v != FORMAT_VERSION {
            return Err(err(format!("unsupported record version {}", self.v)));
        }
        let label = Label::from_bit(self.label)
            .ok_or_else(|| err(format!("label must be 0 or 1, got {}", self.label)))?;
        let provenance = Provenance::parse(&self.provenance)
            .ok_or_else(|| err(format!("unknown provenance `{}`", self.provenance)))?;
        let decode = |blob: Option<String>| -> Result<Option<String>, DatasetError> {
            blob.map(|b| {
                let bytes = BASE64
                    .decode(b)
                    .map_err(|e| err(format!("bad base64 source: {e}")))?;
                String::from_utf8(bytes).map_err(|_| err("source blob is not UTF-8".into()))
            })
            .transpose()
        };
        let files = self
            .files
            .into_iter()
            .map(|f| {
                Ok(FileChange {
                    path: f.path,
                    added_lines: f.added,
                    removed_lines: f.removed,
                    before_source: decode(f.before)?,
                    after_source: decode(f.after)?,
                })
            })
            .collect::<Result<Vec<_>, DatasetError>>()?;
        if files.is_empty() {
            return Err(err("record has no files".into()));
        }
        Ok(CommitRecord {
            repo: self.repo,
            sha: self.sha,
            message: self.message,
            files,
            label,
            provenance,
        })
    }
}

pub fn to_jsonl(records: &[CommitRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(&RecordLine::from(r)).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn from_jsonl(text: &str) -> Result<Vec<CommitRecord>, DatasetError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let line: RecordLine = serde_json::from_str(l).map_err(|e| DatasetError::Jsonl {
                line: i + 1,
                message: e.to_string(),
            })?;
            line.into_record(i + 1)
        })
        .collect()
}

pub fn read_jsonl(path: &Path) -> Result<Vec<CommitRecord>, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_owned(),
        source,
    })?;
    from_jsonl(&text)
}

pub fn write_jsonl(path: &Path, records: &[CommitRecord]) -> Result<(), DatasetError> {
    fs::write(path, to_jsonl(records)).map_err(|source| DatasetError::Io {
        path: path.to_owned(),
        source,
    })
}
