//! Checkpoint container: the magic `CSENT1`, a little-endian `u32` header
//! length, a JSON header (variant, configuration, vocabulary and its
//! fingerprint, training metadata, tensor shapes), then every tensor as raw
//! little-endian `f32` values in header order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::FeatureConfig;
use crate::lex::Vocabulary;
use crate::nn::Tensor2;

use super::{Model, ModelConfig, ModelError, TrainingMetadata, Variant};

pub const MAGIC: &[u8; 6] = b"CSENT1";
const FAMILY: &[u8; 5] = b"CSENT";

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    variant: Variant,
    config: ModelConfig,
    features: FeatureConfig,
    fingerprint: String,
    vocabulary: String,
    metadata: TrainingMetadata,
    tensors: Vec<TensorRecord>,
}

/// A trained model with everything needed to apply it to new commits.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub vocab: Vocabulary,
    pub features: FeatureConfig,
    pub metadata: TrainingMetadata,
}

impl Checkpoint {
    pub fn variant(&self) -> Variant {
        self.model.variant()
    }

    pub fn fingerprint(&self) -> String {
        self.vocab.fingerprint()
    }

    /// Errors unless the checkpoint holds `expected`.
    pub fn expect_variant(self, expected: Variant) -> Result<Self, ModelError> {
        if self.variant() != expected {
            return Err(ModelError::Config(format!(
                "checkpoint holds {}, not {expected}",
                self.variant()
            )));
        }
        Ok(self)
    }

    pub fn check_vocabulary(&self, vocab: &Vocabulary) -> Result<(), ModelError> {
        let (expected, found) = (self.fingerprint(), vocab.fingerprint());
        if expected != found {
            return Err(ModelError::FingerprintMismatch { expected, found });
        }
        Ok(())
    }
}

pub fn write_checkpoint(ckpt: &Checkpoint) -> Result<Vec<u8>, ModelError> {
    let params = ckpt.model.params();
    let header = Header {
        variant: ckpt.model.variant(),
        config: ckpt.model.config(),
        features: ckpt.features,
        fingerprint: ckpt.vocab.fingerprint(),
        vocabulary: ckpt.vocab.to_text(),
        metadata: ckpt.metadata.clone(),
        tensors: params
            .iter()
            .map(|(name, p)| TensorRecord {
                name: name.clone(),
                rows: p.shape().0,
                cols: p.shape().1,
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| ModelError::Format(e.to_string()))?;
    let len = u32::try_from(json.len()).map_err(|_| ModelError::Format("header too large".into()))?;
    let mut out = Vec::with_capacity(MAGIC.len() + 4 + json.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(&json);
    for (_, p) in &params {
        for v in p.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<Checkpoint, ModelError> {
    let truncated = || ModelError::Format("file is truncated".into());
    if bytes.len() >= FAMILY.len() && &bytes[..FAMILY.len()] == FAMILY {
        match bytes.get(FAMILY.len()) {
            Some(b'1') => {}
            Some(&v) => return Err(ModelError::Version(format!("CSENT{}", v as char))),
            None => return Err(truncated()),
        }
    } else {
        return Err(ModelError::Format("not a checkpoint (bad magic)".into()));
    }
    let rest = &bytes[MAGIC.len()..];
    let len_bytes: [u8; 4] = rest.get(..4).ok_or_else(truncated)?.try_into().expect("4 bytes");
    let len = u32::from_le_bytes(len_bytes) as usize;
    let json = rest.get(4..4 + len).ok_or_else(truncated)?;
    let header: Header =
        serde_json::from_slice(json).map_err(|e| ModelError::Format(format!("header: {e}")))?;
    let vocab = Vocabulary::from_text(&header.vocabulary)
        .map_err(|e| ModelError::Format(format!("vocabulary: {e}")))?;
    let found = vocab.fingerprint();
    if found != header.fingerprint {
        return Err(ModelError::FingerprintMismatch {
            expected: header.fingerprint,
            found,
        });
    }

    let mut blob = &rest[4 + len..];
    let mut values = Vec::with_capacity(header.tensors.len());
    for rec in &header.tensors {
        let n = rec.rows.checked_mul(rec.cols).ok_or_else(truncated)?;
        let bytes = blob.get(..n * 4).ok_or_else(truncated)?;
        blob = &blob[n * 4..];
        let data: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::Format(format!(
                "tensor `{}` has non-finite values",
                rec.name
            )));
        }
        let t = Tensor2::new(rec.rows, rec.cols, data).map_err(|e| ModelError::Format(e.to_string()))?;
        values.push((rec.name.clone(), t));
    }
    if !blob.is_empty() {
        return Err(ModelError::Format(format!("{} trailing bytes", blob.len())));
    }
    let mut model = Model::zeros(header.variant, &header.config, vocab.len())?;
    model.set_values(values)?;
    Ok(Checkpoint {
        model,
        vocab,
        features: header.features,
        metadata: header.metadata,
    })
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<(), ModelError> {
    let bytes = write_checkpoint(ckpt)?;
    fs::write(path, bytes).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, ModelError> {
    let bytes = fs::read(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_checkpoint(&bytes)
}
