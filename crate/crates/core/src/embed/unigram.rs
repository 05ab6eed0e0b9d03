use rand::Rng;

use crate::lex::Vocabulary;

use super::EmbedError;

/// Cumulative distribution over non-special token ids, proportional to
/// `count^power`.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeSamplingTable {
    ids: Vec<u32>,
    cumulative: Vec<f64>,
}

impl NegativeSamplingTable {
    pub fn build(vocab: &Vocabulary, power: f64) -> Result<Self, EmbedError> {
        if !power.is_finite() || power < 0.0 {
            return Err(EmbedError::Config(format!(
                "unigram power must be non-negative, got {power}"
            )));
        }
        let (mut ids, mut cumulative) = (Vec::new(), Vec::new());
        let mut total = 0.0;
        for (id, _, count) in vocab.iter() {
            if Vocabulary::is_special(id) {
                continue;
            }
            let w = (count as f64).powf(power);
            if w > 0.0 {
                total += w;
                ids.push(id);
                cumulative.push(total);
            }
        }
        if ids.is_empty() {
            return Err(EmbedError::EmptyVocab);
        }
        cumulative.iter_mut().for_each(|c| *c /= total);
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(NegativeSamplingTable { ids, cumulative })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn probability(&self, id: u32) -> f64 {
        match self.ids.iter().position(|&i| i == id) {
            Some(0) => self.cumulative[0],
            Some(k) => self.cumulative[k] - self.cumulative[k - 1],
            None => 0.0,
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> u32 {
        let u: f64 = rng.random();
        let k = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.ids.len() - 1);
        self.ids[k]
    }
}
