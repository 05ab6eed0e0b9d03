use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::tensor::{axpy, dot, Parameter, Scalar, Tensor2};
use super::NnError;

/// Valid temporal convolution followed by ReLU.
///
/// `weight` is stored as a `(window * in_dim) x filters` matrix whose row
/// `i * in_dim + d` holds the filter taps for offset `i` and input channel `d`,
/// so a window of consecutive input rows is one contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalConv<T> {
    pub weight: Parameter<T>,
    pub bias: Parameter<T>,
    window: usize,
    in_dim: usize,
}

impl<T: Scalar> TemporalConv<T> {
    pub fn zeros(window: usize, in_dim: usize, filters: usize) -> Self {
        TemporalConv {
            weight: Parameter::zeros(window * in_dim, filters),
            bias: Parameter::zeros(1, filters),
            window,
            in_dim,
        }
    }

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and bias.
    pub fn random(window: usize, in_dim: usize, filters: usize, rng: &mut impl Rng) -> Self {
        let mut conv = Self::zeros(window, in_dim, filters);
        let bound = 1.0 / ((window * in_dim) as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound).expect("valid bounds");
        for x in conv
            .weight
            .value
            .data_mut()
            .iter_mut()
            .chain(conv.bias.value.data_mut())
        {
            *x = T::of(dist.sample(rng));
        }
        conv
    }

    pub fn from_parts(weight: Parameter<T>, bias: Parameter<T>, window: usize) -> Result<Self, NnError> {
        let (rows, filters) = weight.shape();
        if window == 0 || rows % window != 0 || bias.shape() != (1, filters) {
            return Err(NnError::Shape(format!(
                "conv weight {rows}x{filters} / bias {:?} inconsistent with window {window}",
                bias.shape()
            )));
        }
        Ok(TemporalConv {
            weight,
            bias,
            window,
            in_dim: rows / window,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn filters(&self) -> usize {
        self.weight.value.cols()
    }

    /// `out[t, f] = ReLU(sum_{i, d} input[t + i, d] * w[i, d, f] + b[f])`
    pub fn forward(&self, input: &Tensor2<T>) -> Result<Tensor2<T>, NnError> {
        let (t_in, d) = input.shape();
        if d != self.in_dim {
            return Err(NnError::Shape(format!(
                "conv expects {} input columns, got {d}",
                self.in_dim
            )));
        }
        if t_in < self.window {
            return Err(NnError::Shape(format!(
                "sequence of {t_in} rows shorter than window {}",
                self.window
            )));
        }
        let f = self.filters();
        let t_out = t_in - self.window + 1;
        let span = self.window * d;
        let w = self.weight.value.data();
        let x = input.data();
        let mut out = Tensor2::zeros(t_out, f);
        for t in 0..t_out {
            let row = out.row_mut(t);
            row.copy_from_slice(self.bias.value.data());
            for (k, &a) in x[t * d..t * d + span].iter().enumerate() {
                if a != T::zero() {
                    axpy(a, &w[k * f..(k + 1) * f], row);
                }
            }
            for v in row.iter_mut() {
                if *v < T::zero() {
                    *v = T::zero();
                }
            }
        }
        Ok(out)
    }

    /// Accumulates weight and bias gradients; returns the input gradient.
    /// `output` is the ReLU output from [`forward`](Self::forward).
    pub fn backward(&mut self, input: &Tensor2<T>, output: &Tensor2<T>, grad_out: &Tensor2<T>) -> Tensor2<T> {
        let d = self.in_dim;
        let f = self.filters();
        let span = self.window * d;
        let x = input.data();
        let mut grad_in = Tensor2::zeros(input.rows(), d);
        let mut g = vec![T::zero(); f];
        for t in 0..output.rows() {
            let mut any = false;
            for (j, gj) in g.iter_mut().enumerate() {
                *gj = if output.get(t, j) > T::zero() {
                    grad_out.get(t, j)
                } else {
                    T::zero()
                };
                any |= *gj != T::zero();
            }
            if !any {
                continue;
            }
            axpy(T::one(), &g, self.bias.grad.data_mut());
            let w = self.weight.value.data();
            let gin = &mut grad_in.data_mut()[t * d..t * d + span];
            for (k, gi) in gin.iter_mut().enumerate() {
                *gi += dot(&w[k * f..(k + 1) * f], &g);
            }
            let wg = self.weight.grad.data_mut();
            for (k, &a) in x[t * d..t * d + span].iter().enumerate() {
                if a != T::zero() {
                    axpy(a, &g, &mut wg[k * f..(k + 1) * f]);
                }
            }
        }
        grad_in
    }
}
