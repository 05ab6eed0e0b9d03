//! Text embedding files: a `<rows> <dim>` header, one `<token> <v1> .. <vdim>`
//! line per vocabulary id, then `#fingerprint <hex>`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::lex::Vocabulary;

use super::{EmbedError, EmbeddingMatrix};

const FINGERPRINT_PREFIX: &str = "#fingerprint ";

pub fn write_embeddings(matrix: &EmbeddingMatrix, vocab: &Vocabulary) -> Result<String, EmbedError> {
    if matrix.rows() != vocab.len() {
        return Err(EmbedError::Config(format!(
            "matrix has {} rows but vocabulary has {} entries",
            matrix.rows(),
            vocab.len()
        )));
    }
    let mut out = format!("{} {}\n", matrix.rows(), matrix.dim());
    for (id, tok, _) in vocab.iter() {
        out.push_str(tok);
        for v in matrix.row(id) {
            write!(out, " {v:.6}").unwrap();
        }
        out.push('\n');
    }
    writeln!(out, "{FINGERPRINT_PREFIX}{}", matrix.fingerprint()).unwrap();
    Ok(out)
}

/// Parses an embedding file and checks it against `vocab`.
pub fn read_embeddings(text: &str, vocab: &Vocabulary) -> Result<EmbeddingMatrix, EmbedError> {
    let err = |line: usize, message: String| EmbedError::Format { line, message };
    let lines: Vec<&str> = text.lines().collect();
    let header = lines.first().ok_or_else(|| err(1, "missing header".into()))?;
    let (rows, dim) = header
        .split_once(' ')
        .and_then(|(r, d)| Some((r.parse::<usize>().ok()?, d.parse::<usize>().ok()?)))
        .filter(|&(_, d)| d > 0)
        .ok_or_else(|| err(1, "expected `<vocab_size> <dim>`".into()))?;

    let body = &lines[1..];
    let (trailer, rows_text) = match body.split_last() {
        Some((last, rest)) if last.starts_with(FINGERPRINT_PREFIX) => (*last, rest),
        _ => return Err(err(lines.len(), "missing `#fingerprint` line".into())),
    };
    if rows_text.len() != rows {
        return Err(err(
            1,
            format!("header declares {rows} rows but file has {}", rows_text.len()),
        ));
    }
    let fingerprint = trailer[FINGERPRINT_PREFIX.len()..].trim().to_owned();

    let mut tokens = Vec::with_capacity(rows);
    let mut vectors = Vec::with_capacity(rows * dim);
    for (i, line) in rows_text.iter().enumerate() {
        let lineno = i + 2;
        let mut parts: Vec<&str> = line.rsplitn(dim + 1, ' ').collect();
        if parts.len() != dim + 1 {
            return Err(err(lineno, format!("expected a token and {dim} components")));
        }
        let token = parts.pop().unwrap();
        for p in parts.iter().rev() {
            let v: f32 = p
                .parse()
                .map_err(|_| err(lineno, format!("bad component `{p}`")))?;
            if !v.is_finite() {
                return Err(err(lineno, "non-finite component".into()));
            }
            vectors.push(v);
        }
        tokens.push(token);
    }

    let expected = vocab.fingerprint();
    if fingerprint != expected {
        return Err(EmbedError::FingerprintMismatch {
            expected,
            found: fingerprint,
        });
    }
    for (i, tok) in tokens.iter().enumerate() {
        if vocab.token(i as u32) != Some(tok) {
            return Err(err(
                i + 2,
                format!("token `{tok}` does not match vocabulary id {i}"),
            ));
        }
    }
    Ok(EmbeddingMatrix::new(dim, vectors, fingerprint))
}

pub fn save_embeddings(path: &Path, matrix: &EmbeddingMatrix, vocab: &Vocabulary) -> Result<(), EmbedError> {
    let text = write_embeddings(matrix, vocab)?;
    fs::write(path, text).map_err(|source| EmbedError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_embeddings(path: &Path, vocab: &Vocabulary) -> Result<EmbeddingMatrix, EmbedError> {
    let text = fs::read_to_string(path).map_err(|source| EmbedError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_embeddings(&text, vocab)
}
