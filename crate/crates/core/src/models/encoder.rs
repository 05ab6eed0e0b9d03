use rand::Rng;
use rand_distr::StandardNormal;

use crate::embed::EmbeddingMatrix;
use crate::lex::PAD_ID;
use crate::nn::{
    apply_mask, dropblock_mask, max_pool_backward, max_pool_over_time, Parameter, RegularizerConfig, Scalar,
    TemporalConv, Tensor2, TypeMask,
};

use super::{HcnnConfig, ModelError};

/// Two-level convolutional encoder: tokens of each file are convolved and
/// max-pooled into a file vector, then the stack of file vectors is convolved
/// and max-pooled into one commit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchicalEncoder<T> {
    pub embedding: Parameter<T>,
    pub file_convs: Vec<TemporalConv<T>>,
    pub commit_conv: TemporalConv<T>,
}

struct MapCache<T> {
    /// ReLU output before DropBlock.
    output: Tensor2<T>,
    dropblock: Option<Vec<T>>,
    argmax: Vec<usize>,
}

struct FileCache<T> {
    ids: Vec<u32>,
    /// Embedding-dropout factor applied to each token.
    scales: Vec<T>,
    input: Tensor2<T>,
    maps: Vec<MapCache<T>>,
}

/// Intermediate values of one [`HierarchicalEncoder::encode`] call.
pub struct EncoderCache<T> {
    files: Vec<FileCache<T>>,
    stack: Tensor2<T>,
    commit_output: Tensor2<T>,
    commit_argmax: Vec<usize>,
}

/// Per-pass stochastic state shared by every file of a commit.
pub struct EncodeNoise<'a, T> {
    pub type_mask: &'a TypeMask<T>,
    /// DropBlock on file-level feature maps; `None` disables it.
    pub dropblock: Option<&'a RegularizerConfig>,
}

/// Largest odd block no longer than `len`, capped at `size`.
fn clamp_block(size: usize, len: usize) -> usize {
    if size <= len {
        size
    } else if len % 2 == 1 {
        len
    } else {
        len - 1
    }
}

impl<T: Scalar> HierarchicalEncoder<T> {
    pub fn zeros(vocab_size: usize, cfg: &HcnnConfig) -> Self {
        HierarchicalEncoder {
            embedding: Parameter::zeros(vocab_size, cfg.embedding_dim),
            file_convs: cfg
                .window_sizes
                .iter()
                .map(|&w| TemporalConv::zeros(w, cfg.embedding_dim, cfg.filters_per_window))
                .collect(),
            commit_conv: TemporalConv::zeros(cfg.commit_window, cfg.file_vector_dim(), cfg.commit_filters),
        }
    }

    /// Embeddings N(0, 1) with a zero `<PAD>` row; convolutions uniform in
    /// `±1/sqrt(fan_in)`.
    pub fn random(vocab_size: usize, cfg: &HcnnConfig, rng: &mut impl Rng) -> Self {
        let d = cfg.embedding_dim;
        let embedding = Tensor2::from_fn(vocab_size, d, |r, _| {
            let z: f64 = rng.sample(StandardNormal);
            if r == PAD_ID as usize {
                T::zero()
            } else {
                T::of(z)
            }
        });
        HierarchicalEncoder {
            embedding: Parameter::new(embedding),
            file_convs: cfg
                .window_sizes
                .iter()
                .map(|&w| TemporalConv::random(w, d, cfg.filters_per_window, rng))
                .collect(),
            commit_conv: TemporalConv::random(
                cfg.commit_window,
                cfg.file_vector_dim(),
                cfg.commit_filters,
                rng,
            ),
        }
    }

    /// Replaces the embedding table with pre-trained vectors.
    pub fn load_embeddings(&mut self, matrix: &EmbeddingMatrix) -> Result<(), ModelError> {
        let (rows, dim) = self.embedding.shape();
        if matrix.rows() != rows || matrix.dim() != dim {
            return Err(ModelError::Config(format!(
                "embeddings are {}x{}, model expects {rows}x{dim}",
                matrix.rows(),
                matrix.dim()
            )));
        }
        for (x, &v) in self.embedding.value.data_mut().iter_mut().zip(matrix.vectors()) {
            *x = T::of(v as f64);
        }
        Ok(())
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.value.rows()
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding.value.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.commit_conv.filters()
    }

    fn max_window(&self) -> usize {
        self.file_convs
            .iter()
            .map(TemporalConv::window)
            .max()
            .unwrap_or(1)
    }

    fn encode_file(
        &self,
        ids: &[u32],
        noise: &EncodeNoise<'_, T>,
        rng: &mut impl Rng,
    ) -> Result<(Vec<T>, FileCache<T>), ModelError> {
        let mut ids = ids.to_vec();
        if ids.len() < self.max_window() {
            ids.resize(self.max_window(), PAD_ID);
        }
        let d = self.embedding_dim();
        let mut input = Tensor2::zeros(ids.len(), d);
        let mut scales = Vec::with_capacity(ids.len());
        for (t, &id) in ids.iter().enumerate() {
            if id as usize >= self.vocab_size() {
                return Err(ModelError::Config(format!(
                    "token id {id} outside vocabulary of {}",
                    self.vocab_size()
                )));
            }
            let scale = noise.type_mask.scale(id);
            scales.push(scale);
            for (x, &e) in input
                .row_mut(t)
                .iter_mut()
                .zip(self.embedding.value.row(id as usize))
            {
                *x = e * scale;
            }
        }
        let mut vector = Vec::with_capacity(self.file_convs.len() * self.file_convs[0].filters());
        let mut maps = Vec::with_capacity(self.file_convs.len());
        for conv in &self.file_convs {
            let output = conv.forward(&input)?;
            let dropblock = match noise.dropblock {
                Some(reg) if reg.dropblock_rate > 0.0 => {
                    let block = clamp_block(reg.dropblock_size, output.rows());
                    Some(dropblock_mask(
                        output.rows(),
                        output.cols(),
                        block,
                        reg.dropblock_rate,
                        reg.dropblock_shared_mask,
                        rng,
                    )?)
                }
                _ => None,
            };
            let (pooled, argmax) = match &dropblock {
                Some(mask) => {
                    let mut masked = output.clone();
                    apply_mask(&mut masked, mask);
                    max_pool_over_time(&masked)
                }
                None => max_pool_over_time(&output),
            };
            vector.extend_from_slice(pooled.data());
            maps.push(MapCache {
                output,
                dropblock,
                argmax,
            });
        }
        Ok((
            vector,
            FileCache {
                ids,
                scales,
                input,
                maps,
            },
        ))
    }

    /// Encodes the token-id sequences of a commit's files into a `1 x F2`
    /// commit vector.
    pub fn encode(
        &self,
        files: &[Vec<u32>],
        noise: &EncodeNoise<'_, T>,
        rng: &mut impl Rng,
    ) -> Result<(Tensor2<T>, EncoderCache<T>), ModelError> {
        if files.is_empty() {
            return Err(ModelError::EmptyCommit);
        }
        let width = self.commit_conv.in_dim();
        let rows = files.len().max(self.commit_conv.window());
        let mut stack = Tensor2::zeros(rows, width);
        let mut caches = Vec::with_capacity(files.len());
        for (i, ids) in files.iter().enumerate() {
            let (vector, cache) = self.encode_file(ids, noise, rng)?;
            stack.row_mut(i).copy_from_slice(&vector);
            caches.push(cache);
        }
        let commit_output = self.commit_conv.forward(&stack)?;
        let (vector, commit_argmax) = max_pool_over_time(&commit_output);
        Ok((
            vector,
            EncoderCache {
                files: caches,
                stack,
                commit_output,
                commit_argmax,
            },
        ))
    }

    /// Accumulates parameter gradients for `d loss / d commit_vector`.
    pub fn backward(&mut self, cache: &EncoderCache<T>, grad: &Tensor2<T>) {
        let g_map = max_pool_backward(grad, &cache.commit_argmax, cache.commit_output.rows());
        let g_stack = self
            .commit_conv
            .backward(&cache.stack, &cache.commit_output, &g_map);
        let d = self.embedding_dim();
        for (i, file) in cache.files.iter().enumerate() {
            let g_file = g_stack.row(i);
            if g_file.iter().all(|&g| g == T::zero()) {
                continue;
            }
            let mut g_input: Tensor2<T> = Tensor2::zeros(file.input.rows(), d);
            let mut offset = 0;
            for (conv, map) in self.file_convs.iter_mut().zip(&file.maps) {
                let f = conv.filters();
                let g_pooled = Tensor2::row_vector(g_file[offset..offset + f].to_vec()).expect("filters > 0");
                offset += f;
                let mut g_out = max_pool_backward(&g_pooled, &map.argmax, map.output.rows());
                if let Some(mask) = &map.dropblock {
                    apply_mask(&mut g_out, mask);
                }
                let gi = conv.backward(&file.input, &map.output, &g_out);
                for (a, &b) in g_input.data_mut().iter_mut().zip(gi.data()) {
                    *a += b;
                }
            }
            for (t, (&id, &scale)) in file.ids.iter().zip(&file.scales).enumerate() {
                if scale == T::zero() {
                    continue;
                }
                let g_row = g_input.row(t);
                let row = self.embedding.grad.row_mut(id as usize);
                for (gr, &gi) in row.iter_mut().zip(g_row) {
                    *gr += gi * scale;
                }
            }
        }
    }
}
