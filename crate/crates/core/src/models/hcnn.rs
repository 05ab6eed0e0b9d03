use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::EncodedCommit;
use crate::embed::EmbeddingMatrix;
use crate::lex::PAD_ID;
use crate::nn::{
    apply_mask, fc_dropout, relu, relu_backward, softmax_cross_entropy, Linear, Mode, Parameter, Scalar,
    Tensor2, TypeMask,
};

use super::encoder::{EncodeNoise, EncoderCache, HierarchicalEncoder};
use super::{HcnnConfig, ModelError, Prediction, Variant};

#[derive(Debug, Clone, PartialEq)]
pub enum Head<T> {
    /// dropout, FC(hidden), ReLU, FC(2)
    Diff { hidden: Linear<T>, output: Linear<T> },
    /// concat(before, after), dropout, FC(2)
    Paired { output: Linear<T> },
}

/// Hierarchical CNN over commit diffs, or siamese over before/after sources.
#[derive(Debug, Clone, PartialEq)]
pub struct Hcnn<T> {
    variant: Variant,
    config: HcnnConfig,
    pub encoder: HierarchicalEncoder<T>,
    pub head: Head<T>,
}

/// Values kept from a forward pass for the backward pass.
pub struct ForwardCache<T> {
    branches: Vec<EncoderCache<T>>,
    /// Head input after dropout.
    head_input: Tensor2<T>,
    dropout: Option<Vec<T>>,
    hidden: Option<Tensor2<T>>,
    pub logits: Vec<T>,
}

impl<T: Scalar> Hcnn<T> {
    fn check(variant: Variant, config: &HcnnConfig) -> Result<(), ModelError> {
        if !variant.is_neural() {
            return Err(ModelError::Config(format!(
                "{variant} is not a convolutional variant"
            )));
        }
        config.validate()
    }

    fn build_head(
        variant: Variant,
        config: &HcnnConfig,
        linear: &mut impl FnMut(usize, usize) -> Linear<T>,
    ) -> Head<T> {
        let f2 = config.commit_filters;
        if variant.is_paired() {
            Head::Paired {
                output: linear(2 * f2, config.classes),
            }
        } else {
            let hidden = linear(f2, config.hidden_dim);
            Head::Diff {
                hidden,
                output: linear(config.hidden_dim, config.classes),
            }
        }
    }

    pub fn zeros(variant: Variant, config: &HcnnConfig, vocab_size: usize) -> Result<Self, ModelError> {
        Self::check(variant, config)?;
        let head = Self::build_head(variant, config, &mut |i, o| Linear::zeros(i, o));
        Ok(Hcnn {
            variant,
            config: config.clone(),
            encoder: HierarchicalEncoder::zeros(vocab_size, config),
            head,
        })
    }

    pub fn random(
        variant: Variant,
        config: &HcnnConfig,
        vocab_size: usize,
        rng: &mut impl Rng,
    ) -> Result<Self, ModelError> {
        Self::check(variant, config)?;
        let encoder = HierarchicalEncoder::random(vocab_size, config, rng);
        let head = Self::build_head(variant, config, &mut |i, o| Linear::random(i, o, rng));
        Ok(Hcnn {
            variant,
            config: config.clone(),
            encoder,
            head,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn config(&self) -> &HcnnConfig {
        &self.config
    }

    pub fn load_embeddings(&mut self, matrix: &EmbeddingMatrix) -> Result<(), ModelError> {
        self.encoder.load_embeddings(matrix)
    }

    /// Every parameter with a stable name, in a fixed order.
    pub fn params(&self) -> Vec<(String, &Parameter<T>)> {
        let mut out = vec![("embedding".to_owned(), &self.encoder.embedding)];
        for (i, c) in self.encoder.file_convs.iter().enumerate() {
            out.push((format!("file_conv.{i}.weight"), &c.weight));
            out.push((format!("file_conv.{i}.bias"), &c.bias));
        }
        out.push(("commit_conv.weight".to_owned(), &self.encoder.commit_conv.weight));
        out.push(("commit_conv.bias".to_owned(), &self.encoder.commit_conv.bias));
        match &self.head {
            Head::Diff { hidden, output } => {
                out.push(("hidden.weight".to_owned(), &hidden.weight));
                out.push(("hidden.bias".to_owned(), &hidden.bias));
                out.push(("output.weight".to_owned(), &output.weight));
                out.push(("output.bias".to_owned(), &output.bias));
            }
            Head::Paired { output } => {
                out.push(("output.weight".to_owned(), &output.weight));
                out.push(("output.bias".to_owned(), &output.bias));
            }
        }
        out
    }

    /// Same order as [`params`](Self::params).
    pub fn params_mut(&mut self) -> Vec<&mut Parameter<T>> {
        let mut out = vec![&mut self.encoder.embedding];
        for c in &mut self.encoder.file_convs {
            out.push(&mut c.weight);
            out.push(&mut c.bias);
        }
        out.push(&mut self.encoder.commit_conv.weight);
        out.push(&mut self.encoder.commit_conv.bias);
        match &mut self.head {
            Head::Diff { hidden, output } => {
                out.extend([
                    &mut hidden.weight,
                    &mut hidden.bias,
                    &mut output.weight,
                    &mut output.bias,
                ]);
            }
            Head::Paired { output } => out.extend([&mut output.weight, &mut output.bias]),
        }
        out
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(Parameter::zero_grad);
    }

    /// Drops any gradient that reached the `<PAD>` embedding row, which stays
    /// fixed during training.
    pub fn clear_pad_grad(&mut self) {
        self.encoder
            .embedding
            .grad
            .row_mut(PAD_ID as usize)
            .fill(T::zero());
    }

    fn branches<'c>(&self, commit: &'c EncodedCommit) -> Vec<&'c [Vec<u32>]> {
        if self.variant.is_paired() {
            vec![&commit.before_files, &commit.after_files]
        } else {
            vec![&commit.diff_files]
        }
    }

    /// Logits for `commit`. In training mode the dropout variants draw their
    /// masks from `rng`; evaluation mode never touches it.
    pub fn forward(
        &self,
        commit: &EncodedCommit,
        mode: Mode,
        rng: &mut impl Rng,
    ) -> Result<ForwardCache<T>, ModelError> {
        let branches = self.branches(commit);
        if branches.iter().any(|b| b.is_empty()) {
            return Err(ModelError::EmptyCommit);
        }
        let reg = &self.config.regularizers;
        let noisy = mode == Mode::Train && self.variant.is_regularized();
        let type_mask = if noisy {
            TypeMask::sample(
                branches.iter().flat_map(|b| b.iter().flatten().copied()),
                reg.embedding_dropout_p,
                rng,
            )
        } else {
            TypeMask::identity()
        };
        let noise = EncodeNoise {
            type_mask: &type_mask,
            dropblock: noisy.then_some(reg),
        };

        let mut vectors = Vec::with_capacity(branches.len());
        let mut caches = Vec::with_capacity(branches.len());
        for files in branches {
            let (v, c) = self.encoder.encode(files, &noise, rng)?;
            vectors.push(v);
            caches.push(c);
        }
        let refs: Vec<&Tensor2<T>> = vectors.iter().collect();
        let joined = Tensor2::concat_cols(&refs)?;
        let (head_input, dropout) = fc_dropout(&joined, reg.fc_dropout_p, mode, rng);
        let (hidden, logits) = match &self.head {
            Head::Diff { hidden, output } => {
                let h = relu(&hidden.forward(&head_input)?);
                let logits = output.forward(&h)?;
                (Some(h), logits)
            }
            Head::Paired { output } => (None, output.forward(&head_input)?),
        };
        Ok(ForwardCache {
            branches: caches,
            head_input,
            dropout,
            hidden,
            logits: logits.into_data(),
        })
    }

    /// Accumulates parameter gradients given `d loss / d logits`.
    pub fn backward(&mut self, cache: &ForwardCache<T>, grad_logits: &[T]) {
        let g_logits = Tensor2::row_vector(grad_logits.to_vec()).expect("logits are non-empty");
        let mut g_in = match &mut self.head {
            Head::Diff { hidden, output } => {
                let h = cache.hidden.as_ref().expect("diff head caches its hidden layer");
                let g_h = relu_backward(h, &output.backward(h, &g_logits));
                hidden.backward(&cache.head_input, &g_h)
            }
            Head::Paired { output } => output.backward(&cache.head_input, &g_logits),
        };
        if let Some(mask) = &cache.dropout {
            apply_mask(&mut g_in, mask);
        }
        let f2 = self.encoder.output_dim();
        for (i, branch) in cache.branches.iter().enumerate() {
            let g = Tensor2::row_vector(g_in.data()[i * f2..(i + 1) * f2].to_vec()).expect("f2 > 0");
            self.encoder.backward(branch, &g);
        }
    }

    /// Cross-entropy of one commit times `weight`; gradients of that
    /// weighted loss are accumulated.
    pub fn accumulate(
        &mut self,
        commit: &EncodedCommit,
        weight: T,
        mode: Mode,
        rng: &mut impl Rng,
    ) -> Result<T, ModelError> {
        let cache = self.forward(commit, mode, rng)?;
        let (loss, mut grad) = softmax_cross_entropy(&cache.logits, commit.label.class_index())?;
        grad.iter_mut().for_each(|g| *g *= weight);
        self.backward(&cache, &grad);
        Ok(loss * weight)
    }

    /// Evaluation-mode logits.
    pub fn logits(&self, commit: &EncodedCommit) -> Result<Vec<T>, ModelError> {
        // Evaluation mode draws nothing; any rng will do.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        Ok(self.forward(commit, Mode::Eval, &mut rng)?.logits)
    }

    pub fn predict(&self, commit: &EncodedCommit) -> Result<Prediction, ModelError> {
        let l = self.logits(commit)?;
        Ok(Prediction::from_logits(l[0].f64(), l[1].f64()))
    }

    /// Commit vector(s) from the encoder in evaluation mode, one per branch.
    pub fn commit_vectors(&self, commit: &EncodedCommit) -> Result<Vec<Vec<T>>, ModelError> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let noise = EncodeNoise {
            type_mask: &TypeMask::identity(),
            dropblock: None,
        };
        self.branches(commit)
            .into_iter()
            .map(|files| Ok(self.encoder.encode(files, &noise, &mut rng)?.0.into_data()))
            .collect()
    }
}
