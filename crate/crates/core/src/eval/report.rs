use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{EvalError, Metrics};

/// `x` rounded to 3 decimals, the precision of every reported metric.
pub fn round3(x: f64) -> f64 {
    format!("{x:.3}").parse().expect("formatted float parses")
}

/// One line of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    #[serde(rename = "input-features")]
    pub input_features: String,
    pub model: String,
    pub embedding: String,
    pub split: String,
    #[serde(rename = "acc")]
    pub accuracy: f64,
    #[serde(rename = "p")]
    pub precision: f64,
    #[serde(rename = "r")]
    pub recall: f64,
    pub f1: f64,
}

impl ResultRow {
    pub fn new(input_features: &str, model: &str, embedding: &str, split: &str, m: &Metrics) -> Self {
        ResultRow {
            input_features: input_features.to_owned(),
            model: model.to_owned(),
            embedding: embedding.to_owned(),
            split: split.to_owned(),
            accuracy: round3(m.accuracy),
            precision: round3(m.precision),
            recall: round3(m.recall),
            f1: round3(m.f1),
        }
    }

    fn cells(&self) -> [String; 8] {
        [
            self.input_features.clone(),
            self.model.clone(),
            self.embedding.clone(),
            self.split.clone(),
            format!("{:.3}", self.accuracy),
            format!("{:.3}", self.precision),
            format!("{:.3}", self.recall),
            format!("{:.3}", self.f1),
        ]
    }
}

const HEADER: [&str; 8] = [
    "Input features",
    "Model",
    "Embedding",
    "Split",
    "Acc.",
    "P",
    "R",
    "F1",
];

/// Aligned plain-text table: text columns left-aligned, numbers right-aligned.
pub fn render_table(rows: &[ResultRow]) -> String {
    let cells: Vec<[String; 8]> = rows.iter().map(ResultRow::cells).collect();
    let mut widths = HEADER.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |row: &[String]| {
        let mut out = String::new();
        for (i, (c, w)) in row.iter().zip(widths).enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            if i < 4 {
                write!(out, "{c:<w$}").unwrap();
            } else {
                write!(out, "{c:>w$}").unwrap();
            }
        }
        out.trim_end().to_owned() + "\n"
    };
    let mut out = line(&HEADER.map(str::to_owned));
    for row in &cells {
        out.push_str(&line(row));
    }
    out
}

/// One JSON object per row.
pub fn render_jsonl(rows: &[ResultRow]) -> String {
    rows.iter()
        .map(|r| serde_json::to_string(r).expect("rows serialize") + "\n")
        .collect()
}

#[derive(Deserialize)]
struct RowSource {
    #[serde(rename = "input-features")]
    input_features: String,
    model: String,
    embedding: String,
    split: String,
    metrics: Metrics,
}

/// Result rows from evaluation summaries: a stream of JSON objects, each
/// carrying the row labels and a `metrics` object.
pub fn read_rows(text: &str) -> Result<Vec<ResultRow>, EvalError> {
    serde_json::Deserializer::from_str(text)
        .into_iter::<RowSource>()
        .map(|r| {
            let r = r.map_err(|e| EvalError::Format(format!("evaluation summary: {e}")))?;
            Ok(ResultRow::new(
                &r.input_features,
                &r.model,
                &r.embedding,
                &r.split,
                &r.metrics,
            ))
        })
        .collect()
}
