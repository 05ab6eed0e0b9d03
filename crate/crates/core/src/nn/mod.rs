//! Small differentiable-kernel library. Every layer has a hand-written
//! forward and backward pass; models compose them in a fixed order.

mod adam;
mod conv;
mod dropout;
pub mod gradcheck;
mod linear;
mod loss;
mod pool;
mod tensor;

use thiserror::Error;

pub use adam::{adam_step, AdamConfig};
pub use conv::TemporalConv;
pub use dropout::{
    apply_mask, dropblock_1d, dropblock_gamma, dropblock_mask, dropout_mask, fc_dropout, Mode,
    RegularizerConfig, TypeMask,
};
pub use gradcheck::{gradient_check, relative_error, GradientCheck};
pub use linear::{relu, relu_backward, Linear};
pub use loss::{softmax, softmax_cross_entropy};
pub use pool::{max_pool_backward, max_pool_over_time};
pub use tensor::{Parameter, Scalar, Tensor2};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("label {label} out of range for {classes} classes")]
    LabelRange { label: usize, classes: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
}
