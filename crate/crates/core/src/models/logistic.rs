use crate::dataset::EncodedCommit;
use crate::nn::{Parameter, Scalar};

use super::{LrConfig, ModelError, Prediction};

/// Logistic regression on the set of vocabulary ids present in a commit's
/// diff (a binary one-hot presence vector).
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression<T> {
    config: LrConfig,
    /// `|V| x 1`
    pub weight: Parameter<T>,
    /// `1 x 1`
    pub bias: Parameter<T>,
}

fn softplus<T: Scalar>(x: T) -> T {
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

impl<T: Scalar> LogisticRegression<T> {
    pub fn zeros(config: &LrConfig, vocab_size: usize) -> Result<Self, ModelError> {
        config.validate()?;
        Ok(LogisticRegression {
            config: config.clone(),
            weight: Parameter::zeros(vocab_size, 1),
            bias: Parameter::zeros(1, 1),
        })
    }

    pub fn config(&self) -> &LrConfig {
        &self.config
    }

    pub fn vocab_size(&self) -> usize {
        self.weight.value.rows()
    }

    /// `b + sum of w[id]` over the distinct diff ids.
    pub fn logit(&self, commit: &EncodedCommit) -> Result<T, ModelError> {
        let w = self.weight.value.data();
        let mut z = self.bias.value.data()[0];
        for id in commit.diff_token_set() {
            let wi = w.get(id as usize).ok_or_else(|| {
                ModelError::Config(format!(
                    "token id {id} outside vocabulary of {}",
                    self.vocab_size()
                ))
            })?;
            z += *wi;
        }
        Ok(z)
    }

    pub fn predict(&self, commit: &EncodedCommit) -> Result<Prediction, ModelError> {
        Ok(Prediction::from_security_logit(self.logit(commit)?.f64()))
    }

    /// Loss of a batch: weighted mean binary cross-entropy plus
    /// `l2 / 2 * ||w||^2` (bias unpenalized).
    pub fn batch_loss(&self, batch: &[(&EncodedCommit, T)]) -> Result<T, ModelError> {
        let n = T::of(batch.len() as f64);
        let mut loss = T::zero();
        for &(c, weight) in batch {
            let z = self.logit(c)?;
            let y = T::of(c.label.bit() as f64);
            loss += weight * (softplus(z) - y * z) / n;
        }
        let sq = self
            .weight
            .value
            .data()
            .iter()
            .fold(T::zero(), |acc, &w| acc + w * w);
        Ok(loss + T::of(self.config.l2 / 2.0) * sq)
    }

    /// Accumulates the gradient of [`batch_loss`](Self::batch_loss) and
    /// returns the loss.
    pub fn accumulate(&mut self, batch: &[(&EncodedCommit, T)]) -> Result<T, ModelError> {
        let loss = self.batch_loss(batch)?;
        let n = T::of(batch.len() as f64);
        for &(c, weight) in batch {
            let z = self.logit(c)?;
            let g = weight * (sigmoid(z) - T::of(c.label.bit() as f64)) / n;
            self.bias.grad.data_mut()[0] += g;
            let wg = self.weight.grad.data_mut();
            for id in c.diff_token_set() {
                wg[id as usize] += g;
            }
        }
        let l2 = T::of(self.config.l2);
        for (g, &w) in self
            .weight
            .grad
            .data_mut()
            .iter_mut()
            .zip(self.weight.value.data())
        {
            *g += l2 * w;
        }
        Ok(loss)
    }

    pub fn params(&self) -> Vec<(String, &Parameter<T>)> {
        vec![
            ("weight".to_owned(), &self.weight),
            ("bias".to_owned(), &self.bias),
        ]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter<T>> {
        vec![&mut self.weight, &mut self.bias]
    }
}
