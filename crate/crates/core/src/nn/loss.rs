use super::tensor::Scalar;
use super::NnError;

/// Numerically stable softmax.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum = exps.iter().copied().fold(T::zero(), |a, b| a + b);
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-ln softmax(logits)[label]` and its gradient `softmax(logits) - onehot(label)`.
pub fn softmax_cross_entropy<T: Scalar>(logits: &[T], label: usize) -> Result<(T, Vec<T>), NnError> {
    if label >= logits.len() {
        return Err(NnError::LabelRange {
            label,
            classes: logits.len(),
        });
    }
    let top = (0..logits.len()).fold(0, |best, i| if logits[i] > logits[best] { i } else { best });
    let max = logits[top];
    // log-sum-exp as max + ln(1 + rest), so a confident correct prediction
    // keeps its tiny loss instead of cancelling to zero.
    let rest = logits
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != top)
        .fold(T::zero(), |acc, (_, &z)| acc + (z - max).exp());
    let log1p_rest = rest.ln_1p();
    let log_z = max + log1p_rest;
    let loss = (max - logits[label]) + log1p_rest;
    let mut grad: Vec<T> = logits.iter().map(|&z| (z - log_z).exp()).collect();
    grad[label] -= T::one();
    Ok((loss, grad))
}
