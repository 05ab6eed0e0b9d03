//! Stochastic regularizers. Each returns the multiplicative mask it applied
//! so the backward pass can reuse it; evaluation mode is always the identity.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{Scalar, Tensor2};
use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizerConfig {
    pub fc_dropout_p: f64,
    pub embedding_dropout_p: f64,
    pub dropblock_size: usize,
    pub dropblock_rate: f64,
    /// One DropBlock mask for all feature columns instead of one per column.
    pub dropblock_shared_mask: bool,
}

impl Default for RegularizerConfig {
    fn default() -> Self {
        RegularizerConfig {
            fc_dropout_p: 0.5,
            embedding_dropout_p: 0.1,
            dropblock_size: 5,
            dropblock_rate: 0.1,
            dropblock_shared_mask: false,
        }
    }
}

impl RegularizerConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        for (name, p) in [
            ("fc_dropout_p", self.fc_dropout_p),
            ("embedding_dropout_p", self.embedding_dropout_p),
            ("dropblock_rate", self.dropblock_rate),
        ] {
            if !(0.0..1.0).contains(&p) {
                return Err(NnError::Config(format!("{name} must be in [0, 1), got {p}")));
            }
        }
        if self.dropblock_size == 0 || self.dropblock_size % 2 == 0 {
            return Err(NnError::Config(format!(
                "dropblock_size must be odd, got {}",
                self.dropblock_size
            )));
        }
        Ok(())
    }
}

/// Multiplies `t` elementwise by `mask`.
pub fn apply_mask<T: Scalar>(t: &mut Tensor2<T>, mask: &[T]) {
    for (x, &m) in t.data_mut().iter_mut().zip(mask) {
        *x *= m;
    }
}

/// Inverted dropout mask: 0 with probability `p`, else `1 / (1 - p)`.
pub fn dropout_mask<T: Scalar>(len: usize, p: f64, rng: &mut impl Rng) -> Vec<T> {
    let keep = T::of(1.0 / (1.0 - p));
    (0..len)
        .map(|_| if rng.random::<f64>() < p { T::zero() } else { keep })
        .collect()
}

/// Standard unit dropout on a vector.
pub fn fc_dropout<T: Scalar>(
    x: &Tensor2<T>,
    p: f64,
    mode: Mode,
    rng: &mut impl Rng,
) -> (Tensor2<T>, Option<Vec<T>>) {
    if mode == Mode::Eval || p == 0.0 {
        return (x.clone(), None);
    }
    let mask = dropout_mask(x.data().len(), p, rng);
    let mut y = x.clone();
    apply_mask(&mut y, &mask);
    (y, Some(mask))
}

/// Embedding dropout decided per token type: every occurrence of a dropped
/// id is zeroed, survivors are scaled by `1 / (1 - p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeMask<T> {
    dropped: BTreeSet<u32>,
    keep_scale: T,
}

impl<T: Scalar> TypeMask<T> {
    pub fn identity() -> Self {
        TypeMask {
            dropped: BTreeSet::new(),
            keep_scale: T::one(),
        }
    }

    /// Draws one Bernoulli(p) per distinct id, in ascending id order.
    pub fn sample(ids: impl IntoIterator<Item = u32>, p: f64, rng: &mut impl Rng) -> Self {
        if p == 0.0 {
            return Self::identity();
        }
        let types: BTreeSet<u32> = ids.into_iter().collect();
        let dropped = types.into_iter().filter(|_| rng.random::<f64>() < p).collect();
        TypeMask {
            dropped,
            keep_scale: T::of(1.0 / (1.0 - p)),
        }
    }

    pub fn scale(&self, id: u32) -> T {
        if self.dropped.contains(&id) {
            T::zero()
        } else {
            self.keep_scale
        }
    }

    pub fn is_dropped(&self, id: u32) -> bool {
        self.dropped.contains(&id)
    }
}

/// Seed probability that makes DropBlock drop about `drop_rate` of a column
/// of `len` units with blocks of `block` units.
pub fn dropblock_gamma(drop_rate: f64, block: usize, len: usize) -> f64 {
    (drop_rate / block as f64) * (len as f64 / (len - block + 1) as f64)
}

/// DropBlock mask for a `rows x cols` feature map (time along rows).
///
/// Block centres are drawn Bernoulli(gamma) among the positions where a
/// whole block fits; the `block` rows centred on each are zeroed and the
/// survivors rescaled by `total / kept`.
pub fn dropblock_mask<T: Scalar>(
    rows: usize,
    cols: usize,
    block: usize,
    drop_rate: f64,
    shared: bool,
    rng: &mut impl Rng,
) -> Result<Vec<T>, NnError> {
    if block == 0 || block % 2 == 0 {
        return Err(NnError::Shape(format!("DropBlock size must be odd, got {block}")));
    }
    if block > rows {
        return Err(NnError::Shape(format!(
            "DropBlock size {block} exceeds feature map length {rows}"
        )));
    }
    let mut keep = vec![true; rows * cols];
    if drop_rate > 0.0 {
        let gamma = dropblock_gamma(drop_rate, block, rows);
        let half = block / 2;
        let mask_cols = if shared { 1 } else { cols };
        for c in 0..mask_cols {
            for centre in half..rows - half {
                if rng.random::<f64>() < gamma {
                    for r in centre - half..=centre + half {
                        if shared {
                            keep[r * cols..(r + 1) * cols].iter_mut().for_each(|k| *k = false);
                        } else {
                            keep[r * cols + c] = false;
                        }
                    }
                }
            }
        }
    }
    let kept = keep.iter().filter(|&&k| k).count();
    let scale = if kept == 0 {
        T::zero()
    } else {
        T::of(keep.len() as f64 / kept as f64)
    };
    Ok(keep
        .into_iter()
        .map(|k| if k { scale } else { T::zero() })
        .collect())
}

pub fn dropblock_1d<T: Scalar>(
    map: &Tensor2<T>,
    block: usize,
    drop_rate: f64,
    mode: Mode,
    rng: &mut impl Rng,
) -> Result<(Tensor2<T>, Option<Vec<T>>), NnError> {
    if block > map.rows() {
        return Err(NnError::Shape(format!(
            "DropBlock size {block} exceeds feature map length {}",
            map.rows()
        )));
    }
    if mode == Mode::Eval || drop_rate == 0.0 {
        return Ok((map.clone(), None));
    }
    let mask = dropblock_mask(map.rows(), map.cols(), block, drop_rate, false, rng)?;
    let mut out = map.clone();
    apply_mask(&mut out, &mask);
    Ok((out, Some(mask)))
}
