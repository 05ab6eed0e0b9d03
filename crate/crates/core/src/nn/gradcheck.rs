//! Central finite-difference verification of hand-written backward passes.

/// Step used by [`gradient_check`] at 64-bit precision.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Gradient magnitudes below this are compared on an absolute scale: central
/// differences carry roughly 1e-11 of round-off at this step size.
pub const MAGNITUDE_FLOOR: f64 = 1e-6;

/// Something with a scalar loss whose gradient can be checked.
pub trait GradientCheck {
    /// Every differentiable tensor (parameters and inputs), in a fixed order.
    fn tensors(&mut self) -> Vec<&mut [f64]>;

    /// Loss at the current values. Must be a deterministic function of them.
    fn loss(&mut self) -> f64;

    /// Analytic gradient of [`loss`](Self::loss), one vector per tensor, in
    /// the order of [`tensors`](Self::tensors).
    fn gradients(&mut self) -> Vec<Vec<f64>>;
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(MAGNITUDE_FLOOR)
}

/// Compares analytic gradients against central differences for every entry
/// of every tensor and returns the worst relative error.
pub fn gradient_check<M: GradientCheck + ?Sized>(module: &mut M, step: f64) -> f64 {
    let analytic = module.gradients();
    let shapes: Vec<usize> = module.tensors().iter().map(|t| t.len()).collect();
    assert_eq!(analytic.len(), shapes.len(), "one gradient per tensor");
    let mut worst = 0.0f64;
    for (ti, &len) in shapes.iter().enumerate() {
        assert_eq!(analytic[ti].len(), len, "gradient shape for tensor {ti}");
        for j in 0..len {
            let original = module.tensors()[ti][j];
            module.tensors()[ti][j] = original + step;
            let plus = module.loss();
            module.tensors()[ti][j] = original - step;
            let minus = module.loss();
            module.tensors()[ti][j] = original;
            let numeric = (plus - minus) / (2.0 * step);
            worst = worst.max(relative_error(analytic[ti][j], numeric));
        }
    }
    worst
}
