use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::lex::{Vocabulary, PAD_ID};
use crate::nn::Scalar;

use super::{EmbedError, EmbeddingMatrix, NegativeSamplingTable};

/// Attempts at drawing a negative different from the target before giving up.
const MAX_RESAMPLE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CbowConfig {
    pub dim: usize,
    /// Context tokens taken on each side of the target.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Starting learning rate; decays linearly to `1e-4` of itself.
    pub learning_rate: f64,
    pub unigram_power: f64,
    /// Frequent-token subsampling threshold (word2vec `sample`); off when `None`.
    pub subsample: Option<f64>,
    pub seed: u64,
}

impl Default for CbowConfig {
    fn default() -> Self {
        CbowConfig {
            dim: 300,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            unigram_power: 0.75,
            subsample: None,
            seed: 1,
        }
    }
}

impl CbowConfig {
    pub fn validate(&self) -> Result<(), EmbedError> {
        let bad = |m: &str| Err(EmbedError::Config(m.to_owned()));
        if self.window < 1 {
            return bad("window must be at least 1");
        }
        if self.negatives < 1 {
            return bad("negatives must be at least 1");
        }
        if self.dim < 1 || self.epochs < 1 {
            return bad("dim and epochs must be positive");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        Ok(())
    }
}

/// Input (context) and output (target) embedding tables, row-major `|V| x dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct CbowTables<T> {
    pub dim: usize,
    pub input: Vec<T>,
    pub output: Vec<T>,
}

impl<T: Scalar> CbowTables<T> {
    pub fn zeros(vocab_size: usize, dim: usize) -> Self {
        CbowTables {
            dim,
            input: vec![T::zero(); vocab_size * dim],
            output: vec![T::zero(); vocab_size * dim],
        }
    }

    /// word2vec initialization: input rows uniform in `[-0.5/dim, 0.5/dim)`,
    /// output rows zero, `<PAD>` zero.
    pub fn random(vocab_size: usize, dim: usize, rng: &mut impl Rng) -> Self {
        let mut t = Self::zeros(vocab_size, dim);
        for (i, x) in t.input.iter_mut().enumerate() {
            if i / dim != PAD_ID as usize {
                *x = T::of((rng.random::<f64>() - 0.5) / dim as f64);
            }
        }
        t
    }

    pub fn input_row(&self, id: u32) -> &[T] {
        &self.input[id as usize * self.dim..(id as usize + 1) * self.dim]
    }

    pub fn output_row(&self, id: u32) -> &[T] {
        &self.output[id as usize * self.dim..(id as usize + 1) * self.dim]
    }

    fn hidden(&self, context: &[u32]) -> Vec<T> {
        let mut h = vec![T::zero(); self.dim];
        for &c in context {
            for (hi, &x) in h.iter_mut().zip(self.input_row(c)) {
                *hi += x;
            }
        }
        let n = T::of(context.len() as f64);
        h.iter_mut().for_each(|v| *v /= n);
        h
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `ln(1 + e^x)` without overflow.
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

/// Negative-sampling CBOW loss
/// `-ln s(h . v_target) - sum_n ln s(-h . v_n)`, with `h` the mean of the
/// context input vectors and `v` output vectors.
pub fn cbow_loss<T: Scalar>(tables: &CbowTables<T>, context: &[u32], target: u32, negatives: &[u32]) -> T {
    let h = tables.hidden(context);
    let mut loss = softplus(-dot(&h, tables.output_row(target)));
    for &n in negatives {
        loss += softplus(dot(&h, tables.output_row(n)));
    }
    loss
}

/// Exact gradient of [`cbow_loss`] as sparse row updates.
#[derive(Debug, Clone, PartialEq)]
pub struct CbowGradient<T> {
    pub loss: T,
    /// `(id, d loss / d input[id])`, one entry per context position.
    pub input: Vec<(u32, Vec<T>)>,
    /// `(id, d loss / d output[id])`, one entry per scored token.
    pub output: Vec<(u32, Vec<T>)>,
}

pub fn cbow_gradient<T: Scalar>(
    tables: &CbowTables<T>,
    context: &[u32],
    target: u32,
    negatives: &[u32],
) -> CbowGradient<T> {
    let h = tables.hidden(context);
    let mut grad_h = vec![T::zero(); tables.dim];
    let mut output = Vec::with_capacity(negatives.len() + 1);
    let mut loss = T::zero();
    let scored = std::iter::once((target, T::one())).chain(negatives.iter().map(|&n| (n, T::zero())));
    for (id, label) in scored {
        let row = tables.output_row(id);
        let score = dot(&h, row);
        loss += if label == T::one() {
            softplus(-score)
        } else {
            softplus(score)
        };
        // d loss / d score
        let g = sigmoid(score) - label;
        for (gh, &v) in grad_h.iter_mut().zip(row) {
            *gh += g * v;
        }
        output.push((id, h.iter().map(|&x| g * x).collect()));
    }
    let inv = T::one() / T::of(context.len() as f64);
    let per_context: Vec<T> = grad_h.iter().map(|&g| g * inv).collect();
    let input = context.iter().map(|&c| (c, per_context.clone())).collect();
    CbowGradient { loss, input, output }
}

/// One SGD step on both tables; returns the loss before the update.
pub fn cbow_step<T: Scalar>(
    tables: &mut CbowTables<T>,
    context: &[u32],
    target: u32,
    negatives: &[u32],
    lr: T,
) -> T {
    let grad = cbow_gradient(tables, context, target, negatives);
    let dim = tables.dim;
    for (id, g) in &grad.output {
        let row = &mut tables.output[*id as usize * dim..(*id as usize + 1) * dim];
        for (x, &gi) in row.iter_mut().zip(g) {
            *x -= lr * gi;
        }
    }
    for (id, g) in &grad.input {
        let row = &mut tables.input[*id as usize * dim..(*id as usize + 1) * dim];
        for (x, &gi) in row.iter_mut().zip(g) {
            *x -= lr * gi;
        }
    }
    grad.loss
}

/// Context positions around `pos`: up to `window` on each side, clipped at
/// the sequence bounds, skipping `<PAD>`.
pub fn context_ids(seq: &[u32], pos: usize, window: usize) -> Vec<u32> {
    let lo = pos.saturating_sub(window);
    let hi = (pos + window + 1).min(seq.len());
    (lo..hi)
        .filter(|&j| j != pos && seq[j] != PAD_ID)
        .map(|j| seq[j])
        .collect()
}

fn keep_probability(count: u64, total: u64, threshold: f64) -> f64 {
    let f = count as f64 / total as f64;
    ((f / threshold).sqrt() + 1.0) * threshold / f
}

/// Trains CBOW embeddings with negative sampling over `corpus` (id sequences
/// encoded with `vocab`). Single-threaded and deterministic for a given seed.
pub fn train_cbow(
    corpus: &[Vec<u32>],
    vocab: &Vocabulary,
    cfg: &CbowConfig,
) -> Result<EmbeddingMatrix, EmbedError> {
    cfg.validate()?;
    let total_tokens: usize = corpus.iter().map(Vec::len).sum();
    if total_tokens == 0 {
        return Err(EmbedError::EmptyCorpus);
    }
    if let Some(bad) = corpus.iter().flatten().find(|&&id| id as usize >= vocab.len()) {
        return Err(EmbedError::Config(format!(
            "token id {bad} outside vocabulary of {}",
            vocab.len()
        )));
    }
    let table = NegativeSamplingTable::build(vocab, cfg.unigram_power)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut tables: CbowTables<f32> = CbowTables::random(vocab.len(), cfg.dim, &mut rng);
    let vocab_total: u64 = vocab.iter().map(|(_, _, c)| c).sum::<u64>().max(1);

    let schedule = (cfg.epochs * total_tokens) as f64;
    let mut processed = 0usize;
    let mut negatives = Vec::with_capacity(cfg.negatives);
    let mut kept: Vec<u32> = Vec::new();
    for _ in 0..cfg.epochs {
        for seq in corpus {
            let seq: &[u32] = match cfg.subsample {
                Some(threshold) => {
                    kept.clear();
                    kept.extend(seq.iter().copied().filter(|&id| {
                        let c = vocab.count(id);
                        c == 0 || rng.random::<f64>() < keep_probability(c, vocab_total, threshold)
                    }));
                    &kept
                }
                None => seq,
            };
            for pos in 0..seq.len() {
                processed += 1;
                let target = seq[pos];
                if target == PAD_ID {
                    continue;
                }
                let context = context_ids(seq, pos, cfg.window);
                if context.is_empty() {
                    continue;
                }
                negatives.clear();
                for _ in 0..cfg.negatives {
                    if let Some(n) = (0..MAX_RESAMPLE)
                        .map(|_| table.sample(&mut rng))
                        .find(|&n| n != target)
                    {
                        negatives.push(n);
                    }
                }
                let frac = 1.0 - processed as f64 / (schedule + 1.0);
                let lr = cfg.learning_rate * frac.max(1e-4);
                cbow_step(&mut tables, &context, target, &negatives, lr as f32);
            }
        }
    }
    Ok(EmbeddingMatrix::new(tables.dim, tables.input, vocab.fingerprint()).with_output(tables.output))
}
