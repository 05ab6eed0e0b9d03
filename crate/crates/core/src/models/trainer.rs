use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{EncodedCommit, Label};
use crate::embed::EmbeddingMatrix;
use crate::eval::compute_metrics;
use crate::lex::Vocabulary;
use crate::nn::{adam_step, Mode};

use super::{EmbeddingInit, Model, ModelConfig, ModelError, Prediction, TrainConfig, Variant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_f1: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub epochs_run: usize,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
    pub best_validation_f1: f64,
    pub history: Vec<EpochRecord>,
}

/// Per-class loss weights: `n / (2 * n_class)` when enabled, else 1.
pub fn class_weights(train: &[EncodedCommit], enabled: bool) -> [f64; 2] {
    if !enabled {
        return [1.0, 1.0];
    }
    let pos = train.iter().filter(|c| c.label.is_positive()).count();
    let counts = [train.len() - pos, pos];
    counts.map(|c| {
        if c == 0 {
            1.0
        } else {
            train.len() as f64 / (2.0 * c as f64)
        }
    })
}

/// Mini-batch Adam over one model. Each epoch visits the training set in a
/// fresh seeded order.
pub struct Trainer {
    model: Model,
    rng: ChaCha8Rng,
    weights: [f64; 2],
    epochs: usize,
}

impl Trainer {
    pub fn new(model: Model, train: &[EncodedCommit], config: &TrainConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);
        Trainer {
            model,
            rng,
            weights: class_weights(train, config.class_weighting),
            epochs: 0,
        }
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn into_model(self) -> Model {
        self.model
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    /// One pass over `train`; returns the mean training loss.
    pub fn run_epoch(&mut self, train: &[EncodedCommit]) -> Result<f64, ModelError> {
        if train.is_empty() {
            return Err(ModelError::Config("training split is empty".into()));
        }
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut self.rng);
        let batch_size = self.model.config().batch_size();
        let mut total = 0.0;
        for chunk in order.chunks(batch_size) {
            let batch: Vec<&EncodedCommit> = chunk.iter().map(|&i| &train[i]).collect();
            total += self.step(&batch)? * batch.len() as f64;
        }
        self.epochs += 1;
        Ok(total / train.len() as f64)
    }

    fn step(&mut self, batch: &[&EncodedCommit]) -> Result<f64, ModelError> {
        let n = batch.len() as f64;
        let w = self.weights;
        let weight = |c: &EncodedCommit| w[c.label.class_index()];
        match &mut self.model {
            Model::Hcnn(m) => {
                let mut loss = 0.0;
                for c in batch {
                    loss += m.accumulate(c, (weight(c) / n) as f32, Mode::Train, &mut self.rng)? as f64;
                }
                m.clear_pad_grad();
                let adam = m.config().adam();
                let frozen = m.config().freeze_embeddings;
                for (i, p) in m.params_mut().into_iter().enumerate() {
                    if i == 0 && frozen {
                        p.zero_grad();
                    } else {
                        adam_step(p, &adam);
                    }
                }
                Ok(loss)
            }
            Model::Lr(m) => {
                let items: Vec<(&EncodedCommit, f32)> =
                    batch.iter().map(|&c| (c, weight(c) as f32)).collect();
                let loss = m.accumulate(&items)? as f64;
                let adam = m.config().adam();
                m.params_mut().into_iter().for_each(|p| adam_step(p, &adam));
                Ok(loss)
            }
        }
    }
}

fn predict_all(model: &Model, data: &[EncodedCommit]) -> Result<Vec<Prediction>, ModelError> {
    data.par_iter().map(|c| model.predict(c)).collect()
}

/// Fraction of `data` classified correctly in evaluation mode.
pub fn accuracy(model: &Model, data: &[EncodedCommit]) -> Result<f64, ModelError> {
    let preds = predict_all(model, data)?;
    let correct = preds.iter().zip(data).filter(|(p, c)| p.label == c.label).count();
    Ok(correct as f64 / data.len().max(1) as f64)
}

fn validation_f1(model: &Model, data: &[EncodedCommit]) -> Result<f64, ModelError> {
    let predicted: Vec<Label> = predict_all(model, data)?.into_iter().map(|p| p.label).collect();
    let actual: Vec<Label> = data.iter().map(|c| c.label).collect();
    Ok(compute_metrics(&predicted, &actual)
        .map_err(|e| ModelError::Config(e.to_string()))?
        .f1)
}

/// Trains `variant` with early stopping on validation F1 and returns the
/// best-validation model. Deterministic for a fixed seed.
pub fn train(
    variant: Variant,
    config: &ModelConfig,
    train: &[EncodedCommit],
    validation: &[EncodedCommit],
    train_config: &TrainConfig,
    vocab: &Vocabulary,
    embeddings: Option<&EmbeddingMatrix>,
) -> Result<(Model, TrainingMetadata), ModelError> {
    if train.is_empty() || validation.is_empty() {
        return Err(ModelError::Config(
            "training and validation splits must be non-empty".into(),
        ));
    }
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(train_config.seed);
    let mut model = Model::new(variant, config, vocab.len(), &mut rng)?;
    let wants_pretrained =
        matches!(config, ModelConfig::Hcnn(c) if c.embedding_init == EmbeddingInit::PreTrained);
    match (&mut model, embeddings) {
        (Model::Hcnn(m), Some(e)) if wants_pretrained => {
            let expected = vocab.fingerprint();
            if e.fingerprint() != expected {
                return Err(ModelError::Config(format!(
                    "embedding fingerprint {} does not match vocabulary {expected}",
                    e.fingerprint()
                )));
            }
            m.load_embeddings(e)?;
        }
        (_, None) if !wants_pretrained => {}
        (_, Some(_)) => {
            return Err(ModelError::Config(
                "embeddings supplied but embedding_init is random".into(),
            ))
        }
        (_, None) => {
            return Err(ModelError::Config(
                "pre-trained initialization needs an embedding matrix".into(),
            ))
        }
    }

    let mut trainer = Trainer::new(model, train, train_config);
    let mut meta = TrainingMetadata {
        seed: train_config.seed,
        ..Default::default()
    };
    let mut best: Option<Model> = None;
    let mut since_best = 0;
    for epoch in 1..=train_config.max_epochs {
        let train_loss = trainer.run_epoch(train)?;
        let f1 = validation_f1(trainer.model(), validation)?;
        log::info!("epoch {epoch}: loss {train_loss:.4}, validation F1 {f1:.4}");
        meta.history.push(EpochRecord {
            epoch,
            train_loss,
            validation_f1: f1,
        });
        meta.epochs_run = epoch;
        if best.is_none() || f1 > meta.best_validation_f1 {
            meta.best_validation_f1 = f1;
            meta.best_epoch = epoch;
            best = Some(trainer.model().clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= train_config.patience {
                break;
            }
        }
    }
    Ok((best.unwrap_or_else(|| trainer.into_model()), meta))
}
