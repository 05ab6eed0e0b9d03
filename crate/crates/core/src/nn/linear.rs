use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::tensor::{axpy, dot, Parameter, Scalar, Tensor2};
use super::NnError;

/// Affine layer on row vectors: `y = x W + b`, `W` is `in x out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear<T> {
    pub weight: Parameter<T>,
    pub bias: Parameter<T>,
}

impl<T: Scalar> Linear<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Linear {
            weight: Parameter::zeros(inputs, outputs),
            bias: Parameter::zeros(1, outputs),
        }
    }

    pub fn random(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let mut layer = Self::zeros(inputs, outputs);
        let bound = 1.0 / (inputs as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound).expect("valid bounds");
        for x in layer
            .weight
            .value
            .data_mut()
            .iter_mut()
            .chain(layer.bias.value.data_mut())
        {
            *x = T::of(dist.sample(rng));
        }
        layer
    }

    pub fn from_parts(weight: Parameter<T>, bias: Parameter<T>) -> Result<Self, NnError> {
        if bias.shape() != (1, weight.shape().1) {
            return Err(NnError::Shape(format!(
                "linear weight {:?} / bias {:?}",
                weight.shape(),
                bias.shape()
            )));
        }
        Ok(Linear { weight, bias })
    }

    pub fn inputs(&self) -> usize {
        self.weight.value.rows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.value.cols()
    }

    pub fn forward(&self, x: &Tensor2<T>) -> Result<Tensor2<T>, NnError> {
        if x.shape() != (1, self.inputs()) {
            return Err(NnError::Shape(format!(
                "linear expects 1x{}, got {:?}",
                self.inputs(),
                x.shape()
            )));
        }
        let out_dim = self.outputs();
        let mut y = self.bias.value.data().to_vec();
        let w = self.weight.value.data();
        for (i, &xi) in x.data().iter().enumerate() {
            if xi != T::zero() {
                axpy(xi, &w[i * out_dim..(i + 1) * out_dim], &mut y);
            }
        }
        Tensor2::row_vector(y)
    }

    /// Accumulates parameter gradients; returns the input gradient.
    pub fn backward(&mut self, x: &Tensor2<T>, grad_out: &Tensor2<T>) -> Tensor2<T> {
        let out_dim = self.outputs();
        let g = grad_out.data();
        axpy(T::one(), g, self.bias.grad.data_mut());
        let w = self.weight.value.data();
        let gx: Vec<T> = (0..self.inputs())
            .map(|i| dot(&w[i * out_dim..(i + 1) * out_dim], g))
            .collect();
        let wg = self.weight.grad.data_mut();
        for (i, &xi) in x.data().iter().enumerate() {
            if xi != T::zero() {
                axpy(xi, g, &mut wg[i * out_dim..(i + 1) * out_dim]);
            }
        }
        Tensor2::row_vector(gx).expect("non-empty input")
    }
}

/// Elementwise ReLU on a row vector.
pub fn relu<T: Scalar>(x: &Tensor2<T>) -> Tensor2<T> {
    let mut y = x.clone();
    y.data_mut().iter_mut().for_each(|v| *v = v.max(T::zero()));
    y
}

/// Gradient of [`relu`] given its output.
pub fn relu_backward<T: Scalar>(output: &Tensor2<T>, grad: &Tensor2<T>) -> Tensor2<T> {
    let mut g = grad.clone();
    for (gi, &o) in g.data_mut().iter_mut().zip(output.data()) {
        if o <= T::zero() {
            *gi = T::zero();
        }
    }
    g
}
