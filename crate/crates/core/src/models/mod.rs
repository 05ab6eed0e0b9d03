//! The commit classifiers: hierarchical CNNs over diffs, siamese CNNs over
//! before/after sources, and a logistic-regression baseline. Also training
//! with early stopping and the checkpoint container.

mod checkpoint;
mod config;
mod encoder;
mod hcnn;
mod logistic;
mod trainer;

use rand::Rng;
use thiserror::Error;

use crate::dataset::{EncodedCommit, Label};
use crate::nn::{NnError, Parameter, Tensor2};

pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint, MAGIC,
};
pub use config::{EmbeddingInit, HcnnConfig, LrConfig, ModelConfig, TrainConfig, Variant};
pub use encoder::{EncodeNoise, EncoderCache, HierarchicalEncoder};
pub use hcnn::{ForwardCache, Hcnn, Head};
pub use logistic::LogisticRegression;
pub use trainer::{accuracy, class_weights, train, EpochRecord, Trainer, TrainingMetadata};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("commit has no files to encode")]
    EmptyCommit,
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("unsupported checkpoint version: {0}")]
    Version(String),
    #[error("malformed checkpoint: {0}")]
    Format(String),
    #[error("vocabulary fingerprint {found} does not match {expected}")]
    FingerprintMismatch { expected: String, found: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Class probabilities for one commit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub probability_security: f64,
    pub label: Label,
}

impl Prediction {
    /// From the log-odds of the security class. Ties go to not-security.
    pub fn from_security_logit(z: f64) -> Self {
        let p = if z >= 0.0 {
            1.0 / (1.0 + (-z).exp())
        } else {
            let e = z.exp();
            e / (1.0 + e)
        };
        let label = if p > 0.5 {
            Label::Security
        } else {
            Label::NotSecurity
        };
        Prediction {
            probability_security: p,
            label,
        }
    }

    /// From two-class logits `[not-security, security]`.
    pub fn from_logits(l0: f64, l1: f64) -> Self {
        let mut p = Self::from_security_logit(l1 - l0);
        p.label = if l1 > l0 {
            Label::Security
        } else {
            Label::NotSecurity
        };
        p
    }

    /// `[P(not-security), P(security)]`
    pub fn probabilities(&self) -> [f64; 2] {
        [1.0 - self.probability_security, self.probability_security]
    }
}

/// A trained classifier of any variant, in 32-bit precision.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Hcnn(Hcnn<f32>),
    Lr(LogisticRegression<f32>),
}

impl Model {
    /// Freshly initialized model.
    pub fn new(
        variant: Variant,
        config: &ModelConfig,
        vocab_size: usize,
        rng: &mut impl Rng,
    ) -> Result<Self, ModelError> {
        match (variant, config) {
            (Variant::LrBaseline, ModelConfig::Lr(c)) => {
                Ok(Model::Lr(LogisticRegression::zeros(c, vocab_size)?))
            }
            (v, ModelConfig::Hcnn(c)) if v.is_neural() => {
                Ok(Model::Hcnn(Hcnn::random(v, c, vocab_size, rng)?))
            }
            (v, _) => Err(ModelError::Config(format!(
                "configuration kind does not fit variant {v}"
            ))),
        }
    }

    /// All-zero parameters; used as a template when loading checkpoints.
    pub fn zeros(variant: Variant, config: &ModelConfig, vocab_size: usize) -> Result<Self, ModelError> {
        match (variant, config) {
            (Variant::LrBaseline, ModelConfig::Lr(c)) => {
                Ok(Model::Lr(LogisticRegression::zeros(c, vocab_size)?))
            }
            (v, ModelConfig::Hcnn(c)) if v.is_neural() => Ok(Model::Hcnn(Hcnn::zeros(v, c, vocab_size)?)),
            (v, _) => Err(ModelError::Config(format!(
                "configuration kind does not fit variant {v}"
            ))),
        }
    }

    pub fn variant(&self) -> Variant {
        match self {
            Model::Hcnn(m) => m.variant(),
            Model::Lr(_) => Variant::LrBaseline,
        }
    }

    pub fn config(&self) -> ModelConfig {
        match self {
            Model::Hcnn(m) => ModelConfig::Hcnn(m.config().clone()),
            Model::Lr(m) => ModelConfig::Lr(m.config().clone()),
        }
    }

    pub fn vocab_size(&self) -> usize {
        match self {
            Model::Hcnn(m) => m.encoder.vocab_size(),
            Model::Lr(m) => m.vocab_size(),
        }
    }

    /// Evaluation-mode prediction. Pure: repeated calls are bit-identical.
    pub fn predict(&self, commit: &EncodedCommit) -> Result<Prediction, ModelError> {
        match self {
            Model::Hcnn(m) => m.predict(commit),
            Model::Lr(m) => m.predict(commit),
        }
    }

    pub fn params(&self) -> Vec<(String, &Parameter<f32>)> {
        match self {
            Model::Hcnn(m) => m.params(),
            Model::Lr(m) => m.params(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter<f32>> {
        match self {
            Model::Hcnn(m) => m.params_mut(),
            Model::Lr(m) => m.params_mut(),
        }
    }

    /// Overwrites parameter values by name; shapes must match exactly and
    /// every parameter must be supplied.
    pub fn set_values(&mut self, mut values: Vec<(String, Tensor2<f32>)>) -> Result<(), ModelError> {
        let names: Vec<String> = self.params().into_iter().map(|(n, _)| n).collect();
        if values.len() != names.len() {
            return Err(ModelError::Config(format!(
                "expected {} tensors, got {}",
                names.len(),
                values.len()
            )));
        }
        for (name, param) in names.iter().zip(self.params_mut()) {
            let pos = values
                .iter()
                .position(|(n, _)| n == name)
                .ok_or_else(|| ModelError::Config(format!("missing tensor `{name}`")))?;
            let (_, t) = values.swap_remove(pos);
            if t.shape() != param.shape() {
                return Err(ModelError::Config(format!(
                    "tensor `{name}` is {:?}, expected {:?}",
                    t.shape(),
                    param.shape()
                )));
            }
            *param = Parameter::new(t);
        }
        Ok(())
    }
}
