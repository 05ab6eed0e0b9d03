//! Accuracy, precision, recall and F1 with security-relevant as the positive
//! class, plus evaluation of checkpoints and result tables.

mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{CommitRecord, EncodedCommit, Label};
use crate::models::{Checkpoint, EmbeddingInit, ModelConfig, ModelError};

pub use report::{read_rows, render_jsonl, render_table, round3, ResultRow};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{predictions} predictions for {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("no samples to score")]
    EmptyInput,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// F1 from precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

impl Metrics {
    /// Zero denominators give 0 rather than NaN.
    pub fn from_counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Metrics {
            accuracy: ratio(tp + tn, tp + fp + fn_ + tn),
            precision,
            recall,
            f1: f1_score(precision, recall),
            tp,
            fp,
            fn_,
            tn,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn compute_metrics(predictions: &[Label], labels: &[Label]) -> Result<Metrics, EvalError> {
    if predictions.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (p, y) in predictions.iter().zip(labels) {
        match (p.is_positive(), y.is_positive()) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(Metrics::from_counts(tp, fp, fn_, tn))
}

/// Score of one record, as written to the per-record score file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordScore {
    pub repo: String,
    pub sha: String,
    pub label: u8,
    pub predicted: u8,
    pub probability_security: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub metrics: Metrics,
    pub scores: Vec<RecordScore>,
}

/// Evaluation-mode predictions for every record of a split.
pub fn evaluate(ckpt: &Checkpoint, records: &[CommitRecord]) -> Result<Evaluation, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let scores: Vec<RecordScore> = records
        .par_iter()
        .map(|r| {
            let encoded = EncodedCommit::new(r.code(), r.label, &ckpt.vocab, &ckpt.features);
            let p = ckpt.model.predict(&encoded)?;
            Ok(RecordScore {
                repo: r.repo.clone(),
                sha: r.sha.clone(),
                label: r.label.bit(),
                predicted: p.label.bit(),
                probability_security: p.probability_security,
            })
        })
        .collect::<Result<_, ModelError>>()?;
    let predicted: Vec<Label> = scores
        .iter()
        .map(|s| Label::from_bit(s.predicted).expect("0 or 1"))
        .collect();
    let actual: Vec<Label> = records.iter().map(|r| r.label).collect();
    Ok(Evaluation {
        metrics: compute_metrics(&predicted, &actual)?,
        scores,
    })
}

/// Embedding column of a result row.
pub fn embedding_label(config: &ModelConfig) -> &'static str {
    match config {
        ModelConfig::Lr(_) => "One-hot",
        ModelConfig::Hcnn(c) => match c.embedding_init {
            EmbeddingInit::Random => EmbeddingInit::Random.label(),
            EmbeddingInit::PreTrained => EmbeddingInit::PreTrained.label(),
        },
    }
}

/// A results row for `ckpt` evaluated on the split called `split`.
pub fn result_row(ckpt: &Checkpoint, split: &str, metrics: &Metrics) -> ResultRow {
    let v = ckpt.variant();
    ResultRow::new(
        v.input_features(),
        v.model_name(),
        embedding_label(&ckpt.model.config()),
        split,
        metrics,
    )
}
