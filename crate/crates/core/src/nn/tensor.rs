use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

use super::NnError;

/// Floating-point element type. Training runs in `f32`; gradient checks in `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("representable")
    }

    fn f64(self) -> f64 {
        self.to_f64().expect("finite conversion")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Row-major matrix with strictly positive dimensions.
#[derive(Clone, PartialEq)]
pub struct Tensor2<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Debug> Debug for Tensor2<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Tensor2({}x{}, {:?})",
            self.rows,
            self.cols,
            &self.data[..self.data.len().min(8)]
        )
    }
}

impl<T: Scalar> Tensor2<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, NnError> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(NnError::Shape(format!(
                "cannot build {rows}x{cols} tensor from {} values",
                data.len()
            )));
        }
        let t = Tensor2 { rows, cols, data };
        t.debug_check_finite();
        Ok(t)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "tensor dimensions must be positive");
        Tensor2 {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut t = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                t.data[r * cols + c] = f(r, c);
            }
        }
        t
    }

    pub fn row_vector(values: Vec<T>) -> Result<Self, NnError> {
        let n = values.len();
        Self::new(1, n, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn fill(&mut self, v: T) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    /// Horizontal concatenation of row vectors.
    pub fn concat_cols(parts: &[&Tensor2<T>]) -> Result<Self, NnError> {
        if parts.iter().any(|p| p.rows != 1) {
            return Err(NnError::Shape("concat_cols expects row vectors".into()));
        }
        Self::row_vector(parts.iter().flat_map(|p| p.data.iter().copied()).collect())
    }

    pub fn debug_check_finite(&self) {
        debug_assert!(self.data.iter().all(|x| x.is_finite()), "non-finite tensor entry");
    }
}

/// A trainable tensor with its gradient and Adam moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter<T> {
    pub value: Tensor2<T>,
    pub grad: Tensor2<T>,
    pub adam_m: Tensor2<T>,
    pub adam_v: Tensor2<T>,
    pub step: u64,
}

impl<T: Scalar> Parameter<T> {
    pub fn new(value: Tensor2<T>) -> Self {
        let (r, c) = value.shape();
        Parameter {
            value,
            grad: Tensor2::zeros(r, c),
            adam_m: Tensor2::zeros(r, c),
            adam_v: Tensor2::zeros(r, c),
            step: 0,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(Tensor2::zeros(rows, cols))
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(T::zero());
    }

    /// Copies the values, dropping optimizer state.
    pub fn with_value_only(&self) -> Self {
        Self::new(self.value.clone())
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `y += alpha * x`
pub(crate) fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
