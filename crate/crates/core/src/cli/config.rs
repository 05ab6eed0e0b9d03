//! Run configuration: `key = value` settings from a file, then `--set`
//! overrides, then dedicated command-line flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use crate::dataset::{DiffSides, FeatureConfig};
use crate::embed::CbowConfig;
use crate::lex::{DEFAULT_MAX_SIZE, DEFAULT_MIN_COUNT};
use crate::models::{EmbeddingInit, HcnnConfig, LrConfig, TrainConfig};
use crate::nn::RegularizerConfig;

use super::UsageError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    values: BTreeMap<&'static str, String>,
}

fn list<T: Display>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl Default for RunConfig {
    fn default() -> Self {
        let f = FeatureConfig::default();
        let c = CbowConfig::default();
        let h = HcnnConfig::default();
        let r = RegularizerConfig::default();
        let l = LrConfig::default();
        let t = TrainConfig::default();
        let pairs: Vec<(&'static str, String)> = vec![
            ("features.max_files", f.max_files.to_string()),
            ("features.max_tokens_per_side", f.max_tokens_per_side.to_string()),
            ("features.sides", f.sides.as_str().to_owned()),
            ("vocab.min_count", DEFAULT_MIN_COUNT.to_string()),
            ("vocab.max_size", DEFAULT_MAX_SIZE.to_string()),
            ("ingest.negative_ratio", "0".into()),
            ("ingest.seed", "0".into()),
            ("split.ratios", "0.6,0.2,0.2".into()),
            ("split.seed", "0".into()),
            ("cbow.dim", c.dim.to_string()),
            ("cbow.window", c.window.to_string()),
            ("cbow.negatives", c.negatives.to_string()),
            ("cbow.epochs", c.epochs.to_string()),
            ("cbow.learning_rate", c.learning_rate.to_string()),
            ("cbow.unigram_power", c.unigram_power.to_string()),
            (
                "cbow.subsample",
                c.subsample.map_or("none".into(), |s| s.to_string()),
            ),
            ("cbow.seed", c.seed.to_string()),
            ("hcnn.embedding_dim", h.embedding_dim.to_string()),
            ("hcnn.window_sizes", list(&h.window_sizes)),
            ("hcnn.filters_per_window", h.filters_per_window.to_string()),
            ("hcnn.commit_window", h.commit_window.to_string()),
            ("hcnn.commit_filters", h.commit_filters.to_string()),
            ("hcnn.hidden_dim", h.hidden_dim.to_string()),
            (
                "hcnn.batch_size",
                h.batch_size.map_or("auto".into(), |b| b.to_string()),
            ),
            ("hcnn.lr", h.lr.to_string()),
            ("hcnn.freeze_embeddings", h.freeze_embeddings.to_string()),
            ("hcnn.fc_dropout", r.fc_dropout_p.to_string()),
            ("hcnn.embedding_dropout", r.embedding_dropout_p.to_string()),
            ("hcnn.dropblock_size", r.dropblock_size.to_string()),
            ("hcnn.dropblock_rate", r.dropblock_rate.to_string()),
            ("hcnn.dropblock_shared_mask", r.dropblock_shared_mask.to_string()),
            ("lr.l2", l.l2.to_string()),
            ("lr.batch_size", l.batch_size.to_string()),
            ("lr.lr", l.lr.to_string()),
            ("train.max_epochs", t.max_epochs.to_string()),
            ("train.patience", t.patience.to_string()),
            ("train.class_weighting", t.class_weighting.to_string()),
            ("train.seed", t.seed.to_string()),
        ];
        RunConfig {
            values: pairs.into_iter().collect(),
        }
    }
}

impl RunConfig {
    pub fn keys(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.values.keys().copied()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Sets a known key; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), UsageError> {
        match self.values.get_mut(key) {
            Some(v) => {
                *v = value.trim().to_owned();
                Ok(())
            }
            None => Err(UsageError(format!("unknown config key `{key}`"))),
        }
    }

    /// Applies a `key=value` assignment.
    pub fn assign(&mut self, assignment: &str) -> Result<(), UsageError> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| UsageError(format!("expected key=value, got `{assignment}`")))?;
        self.set(k.trim(), v)
    }

    /// Applies a config file: `key = value` lines, `#` comments. A key may
    /// appear only once.
    pub fn apply_text(&mut self, text: &str) -> Result<(), UsageError> {
        let mut seen = std::collections::HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let key = line.split_once('=').map(|(k, _)| k.trim()).unwrap_or(line);
            if !seen.insert(key.to_owned()) {
                return Err(UsageError(format!(
                    "config line {}: duplicate key `{key}`",
                    i + 1
                )));
            }
            self.assign(line)
                .map_err(|e| UsageError(format!("config line {}: {}", i + 1, e.0)))?;
        }
        Ok(())
    }

    /// The effective settings, readable back with [`RunConfig::apply_text`].
    pub fn to_text(&self, command: &str) -> String {
        let mut out = format!("# csent {} {command}\n", env!("CARGO_PKG_VERSION"));
        for (k, v) in &self.values {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<T, UsageError>
    where
        T::Err: Display,
    {
        let raw = self.get(key).expect("known key");
        raw.parse()
            .map_err(|e| UsageError(format!("config key `{key}`: cannot parse `{raw}`: {e}")))
    }

    fn parse_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, UsageError>
    where
        T::Err: Display,
    {
        let raw = self.get(key).expect("known key");
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|e| UsageError(format!("config key `{key}`: cannot parse `{s}`: {e}")))
            })
            .collect()
    }

    fn optional<T: FromStr>(&self, key: &str, none: &str) -> Result<Option<T>, UsageError>
    where
        T::Err: Display,
    {
        if self.get(key) == Some(none) {
            Ok(None)
        } else {
            self.parse(key).map(Some)
        }
    }

    pub fn features(&self) -> Result<FeatureConfig, UsageError> {
        let raw = self.get("features.sides").expect("known key");
        let sides = DiffSides::parse(raw).ok_or_else(|| {
            UsageError(format!(
                "config key `features.sides`: expected both or added, got `{raw}`"
            ))
        })?;
        Ok(FeatureConfig {
            max_files: self.parse("features.max_files")?,
            max_tokens_per_side: self.parse("features.max_tokens_per_side")?,
            sides,
        })
    }

    pub fn vocab_params(&self) -> Result<(u64, usize), UsageError> {
        Ok((self.parse("vocab.min_count")?, self.parse("vocab.max_size")?))
    }

    pub fn negative_sampling(&self) -> Result<(f64, u64), UsageError> {
        let ratio: f64 = self.parse("ingest.negative_ratio")?;
        if !(ratio >= 0.0) {
            return Err(UsageError(format!(
                "config key `ingest.negative_ratio` must be non-negative, got {ratio}"
            )));
        }
        Ok((ratio, self.parse("ingest.seed")?))
    }

    pub fn split(&self) -> Result<([f64; 3], u64), UsageError> {
        let ratios: Vec<f64> = self.parse_list("split.ratios")?;
        let ratios: [f64; 3] = ratios
            .try_into()
            .map_err(|r: Vec<f64>| UsageError(format!("split.ratios needs 3 values, got {}", r.len())))?;
        Ok((ratios, self.parse("split.seed")?))
    }

    pub fn cbow(&self) -> Result<CbowConfig, UsageError> {
        Ok(CbowConfig {
            dim: self.parse("cbow.dim")?,
            window: self.parse("cbow.window")?,
            negatives: self.parse("cbow.negatives")?,
            epochs: self.parse("cbow.epochs")?,
            learning_rate: self.parse("cbow.learning_rate")?,
            unigram_power: self.parse("cbow.unigram_power")?,
            subsample: self.optional("cbow.subsample", "none")?,
            seed: self.parse("cbow.seed")?,
        })
    }

    pub fn hcnn(&self, embedding_init: EmbeddingInit) -> Result<HcnnConfig, UsageError> {
        Ok(HcnnConfig {
            embedding_dim: self.parse("hcnn.embedding_dim")?,
            window_sizes: self.parse_list("hcnn.window_sizes")?,
            filters_per_window: self.parse("hcnn.filters_per_window")?,
            commit_window: self.parse("hcnn.commit_window")?,
            commit_filters: self.parse("hcnn.commit_filters")?,
            hidden_dim: self.parse("hcnn.hidden_dim")?,
            classes: 2,
            regularizers: RegularizerConfig {
                fc_dropout_p: self.parse("hcnn.fc_dropout")?,
                embedding_dropout_p: self.parse("hcnn.embedding_dropout")?,
                dropblock_size: self.parse("hcnn.dropblock_size")?,
                dropblock_rate: self.parse("hcnn.dropblock_rate")?,
                dropblock_shared_mask: self.parse("hcnn.dropblock_shared_mask")?,
            },
            embedding_init,
            batch_size: self.optional("hcnn.batch_size", "auto")?,
            lr: self.parse("hcnn.lr")?,
            freeze_embeddings: self.parse("hcnn.freeze_embeddings")?,
        })
    }

    pub fn lr(&self) -> Result<LrConfig, UsageError> {
        Ok(LrConfig {
            l2: self.parse("lr.l2")?,
            batch_size: self.parse("lr.batch_size")?,
            lr: self.parse("lr.lr")?,
        })
    }

    pub fn train(&self) -> Result<TrainConfig, UsageError> {
        Ok(TrainConfig {
            max_epochs: self.parse("train.max_epochs")?,
            patience: self.parse("train.patience")?,
            seed: self.parse("train.seed")?,
            class_weighting: self.parse("train.class_weighting")?,
        })
    }
}
