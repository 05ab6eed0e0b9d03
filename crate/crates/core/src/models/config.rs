use serde::{Deserialize, Serialize};

use crate::nn::{AdamConfig, RegularizerConfig};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "diff-hcnn")]
    DiffHcnn,
    #[serde(rename = "diff-hrcnn")]
    DiffHrcnn,
    #[serde(rename = "paired-hcnn")]
    PairedHcnn,
    #[serde(rename = "paired-hrcnn")]
    PairedHrcnn,
    #[serde(rename = "lr-baseline")]
    LrBaseline,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::DiffHcnn,
        Variant::DiffHrcnn,
        Variant::PairedHcnn,
        Variant::PairedHrcnn,
        Variant::LrBaseline,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::DiffHcnn => "diff-hcnn",
            Variant::DiffHrcnn => "diff-hrcnn",
            Variant::PairedHcnn => "paired-hcnn",
            Variant::PairedHrcnn => "paired-hrcnn",
            Variant::LrBaseline => "lr-baseline",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.as_str() == s)
    }

    pub fn is_paired(self) -> bool {
        matches!(self, Variant::PairedHcnn | Variant::PairedHrcnn)
    }

    /// Embedding dropout and DropBlock are active.
    pub fn is_regularized(self) -> bool {
        matches!(self, Variant::DiffHrcnn | Variant::PairedHrcnn)
    }

    pub fn is_neural(self) -> bool {
        self != Variant::LrBaseline
    }

    /// Input representation, as labelled in result tables.
    pub fn input_features(self) -> &'static str {
        if self.is_paired() {
            "Paired-code Tokens"
        } else {
            "Diff Tokens"
        }
    }

    /// Model family, as labelled in result tables.
    pub fn model_name(self) -> &'static str {
        match self {
            Variant::DiffHcnn | Variant::PairedHcnn => "H-CNN",
            Variant::DiffHrcnn | Variant::PairedHrcnn => "HR-CNN",
            Variant::LrBaseline => "LR",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingInit {
    Random,
    PreTrained,
}

impl EmbeddingInit {
    pub fn as_str(self) -> &'static str {
        match self {
            EmbeddingInit::Random => "random",
            EmbeddingInit::PreTrained => "pre-trained",
        }
    }

    /// As labelled in result tables.
    pub fn label(self) -> &'static str {
        match self {
            EmbeddingInit::Random => "Random",
            EmbeddingInit::PreTrained => "Pre-trained",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HcnnConfig {
    pub embedding_dim: usize,
    pub window_sizes: Vec<usize>,
    pub filters_per_window: usize,
    pub commit_window: usize,
    pub commit_filters: usize,
    pub hidden_dim: usize,
    pub classes: usize,
    pub regularizers: RegularizerConfig,
    pub embedding_init: EmbeddingInit,
    /// `None` picks 16 for random and 8 for pre-trained embeddings.
    pub batch_size: Option<usize>,
    pub lr: f64,
    pub freeze_embeddings: bool,
}

impl Default for HcnnConfig {
    fn default() -> Self {
        HcnnConfig {
            embedding_dim: 300,
            window_sizes: vec![3, 5, 7],
            filters_per_window: 100,
            commit_window: 3,
            commit_filters: 128,
            hidden_dim: 128,
            classes: 2,
            regularizers: RegularizerConfig::default(),
            embedding_init: EmbeddingInit::Random,
            batch_size: None,
            lr: 0.001,
            freeze_embeddings: false,
        }
    }
}

impl HcnnConfig {
    pub fn batch_size(&self) -> usize {
        self.batch_size.unwrap_or(match self.embedding_init {
            EmbeddingInit::Random => 16,
            EmbeddingInit::PreTrained => 8,
        })
    }

    /// Width of a file vector: one max-pooled feature per filter per window.
    pub fn file_vector_dim(&self) -> usize {
        self.window_sizes.len() * self.filters_per_window
    }

    pub fn max_window(&self) -> usize {
        self.window_sizes.iter().copied().max().unwrap_or(1)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::Config(m));
        if self.window_sizes.is_empty() || self.window_sizes.contains(&0) {
            return bad("window_sizes must be non-empty and each at least 1".into());
        }
        for (name, v) in [
            ("embedding_dim", self.embedding_dim),
            ("filters_per_window", self.filters_per_window),
            ("commit_window", self.commit_window),
            ("commit_filters", self.commit_filters),
            ("hidden_dim", self.hidden_dim),
            ("batch_size", self.batch_size()),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.classes != 2 {
            return bad(format!("only 2 classes are supported, got {}", self.classes));
        }
        if !(self.lr > 0.0) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        self.regularizers
            .validate()
            .map_err(|e| ModelError::Config(e.to_string()))
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            ..AdamConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrConfig {
    /// L2 penalty `lambda / 2 * ||w||^2`, added once per batch.
    pub l2: f64,
    pub batch_size: usize,
    pub lr: f64,
}

impl Default for LrConfig {
    fn default() -> Self {
        LrConfig {
            l2: 1e-4,
            batch_size: 16,
            lr: 0.001,
        }
    }
}

impl LrConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.batch_size == 0 || !(self.lr > 0.0) || !(self.l2 >= 0.0) {
            return Err(ModelError::Config(
                "lr-baseline needs batch_size > 0, lr > 0 and l2 >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            ..AdamConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelConfig {
    Hcnn(HcnnConfig),
    Lr(LrConfig),
}

impl ModelConfig {
    pub fn default_for(variant: Variant) -> Self {
        if variant.is_neural() {
            ModelConfig::Hcnn(HcnnConfig::default())
        } else {
            ModelConfig::Lr(LrConfig::default())
        }
    }

    pub fn batch_size(&self) -> usize {
        match self {
            ModelConfig::Hcnn(c) => c.batch_size(),
            ModelConfig::Lr(c) => c.batch_size,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            ModelConfig::Hcnn(c) => c.validate(),
            ModelConfig::Lr(c) => c.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Epochs without a validation-F1 improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    /// Weight each class's loss by `n / (2 * n_class)` over the training set.
    pub class_weighting: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 100,
            patience: 10,
            seed: 0,
            class_weighting: false,
        }
    }
}
