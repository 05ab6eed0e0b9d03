use serde::{Deserialize, Serialize};

use super::tensor::{Parameter, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update. Clears the gradient afterwards.
pub fn adam_step<T: Scalar>(param: &mut Parameter<T>, cfg: &AdamConfig) {
    param.step += 1;
    let t = param.step as i32;
    let (b1, b2) = (T::of(cfg.beta1), T::of(cfg.beta2));
    let correction1 = T::one() - b1.powi(t);
    let correction2 = T::one() - b2.powi(t);
    let lr = T::of(cfg.lr);
    let eps = T::of(cfg.eps);
    let Parameter {
        value,
        grad,
        adam_m,
        adam_v,
        ..
    } = param;
    for (((x, g), m), v) in value
        .data_mut()
        .iter_mut()
        .zip(grad.data_mut().iter_mut())
        .zip(adam_m.data_mut().iter_mut())
        .zip(adam_v.data_mut().iter_mut())
    {
        *m = b1 * *m + (T::one() - b1) * *g;
        *v = b2 * *v + (T::one() - b2) * *g * *g;
        let m_hat = *m / correction1;
        let v_hat = *v / correction2;
        *x -= lr * m_hat / (v_hat.sqrt() + eps);
        *g = T::zero();
    }
}
