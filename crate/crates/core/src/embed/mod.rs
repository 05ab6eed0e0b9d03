//! CBOW token embeddings with negative sampling, plus their text file format.

mod cbow;
mod io;
mod unigram;

use thiserror::Error;

pub use cbow::{
    cbow_gradient, cbow_loss, cbow_step, context_ids, train_cbow, CbowConfig, CbowGradient, CbowTables,
};
pub use io::{load_embeddings, read_embeddings, save_embeddings, write_embeddings};
pub use unigram::NegativeSamplingTable;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("vocabulary has no non-special tokens to sample from")]
    EmptyVocab,
    #[error("embedding corpus is empty")]
    EmptyCorpus,
    #[error("invalid embedding configuration: {0}")]
    Config(String),
    #[error("embedding file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("embedding fingerprint {found} does not match vocabulary {expected}")]
    FingerprintMismatch { expected: String, found: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Vocabulary-aligned token vectors, row-major `|V| x dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    vectors: Vec<f32>,
    /// Target table from training. Never written to disk.
    output_vectors: Option<Vec<f32>>,
    fingerprint: String,
}

impl EmbeddingMatrix {
    pub fn new(dim: usize, vectors: Vec<f32>, fingerprint: String) -> Self {
        assert!(
            dim > 0 && vectors.len() % dim == 0,
            "embedding data is not a whole number of rows"
        );
        EmbeddingMatrix {
            dim,
            vectors,
            output_vectors: None,
            fingerprint,
        }
    }

    pub fn with_output(mut self, output: Vec<f32>) -> Self {
        assert_eq!(output.len(), self.vectors.len());
        self.output_vectors = Some(output);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.vectors.len() / self.dim
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn vectors(&self) -> &[f32] {
        &self.vectors
    }

    pub fn output_vectors(&self) -> Option<&[f32]> {
        self.output_vectors.as_deref()
    }

    pub fn row(&self, id: u32) -> &[f32] {
        &self.vectors[id as usize * self.dim..(id as usize + 1) * self.dim]
    }

    pub fn cosine(&self, a: u32, b: u32) -> f64 {
        cosine(self.row(a), self.row(b))
    }

    /// Most cosine-similar row to `id` among `candidates`, excluding `id` itself.
    pub fn nearest(&self, id: u32, candidates: impl IntoIterator<Item = u32>) -> Option<u32> {
        let mut best: Option<(u32, f64)> = None;
        for c in candidates {
            if c == id {
                continue;
            }
            let s = self.cosine(id, c);
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((c, s));
            }
        }
        best.map(|(c, _)| c)
    }
}

pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        ab / (aa.sqrt() * bb.sqrt())
    }
}
