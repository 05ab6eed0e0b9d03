use super::tensor::{Scalar, Tensor2};

/// Column-wise maximum over time. Returns the pooled row and, per column,
/// the earliest row holding the maximum.
pub fn max_pool_over_time<T: Scalar>(map: &Tensor2<T>) -> (Tensor2<T>, Vec<usize>) {
    let mut best = map.row(0).to_vec();
    let mut argmax = vec![0; map.cols()];
    for t in 1..map.rows() {
        for (f, &v) in map.row(t).iter().enumerate() {
            if v > best[f] {
                best[f] = v;
                argmax[f] = t;
            }
        }
    }
    (Tensor2::row_vector(best).expect("non-empty map"), argmax)
}

/// Routes each pooled gradient back to its argmax row.
pub fn max_pool_backward<T: Scalar>(grad: &Tensor2<T>, argmax: &[usize], rows: usize) -> Tensor2<T> {
    let mut out = Tensor2::zeros(rows, argmax.len());
    for (f, &t) in argmax.iter().enumerate() {
        out.set(t, f, grad.get(0, f));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{gradient_check, GradientCheck};

    fn t(rows: usize, cols: usize, v: &[f64]) -> Tensor2<f64> {
        Tensor2::new(rows, cols, v.to_vec()).unwrap()
    }

    #[test]
    fn examples() {
        let (p, idx) = max_pool_over_time(&t(2, 2, &[1.0, 4.0, 3.0, 2.0]));
        assert_eq!(p.data(), &[3.0, 4.0]);
        assert_eq!(idx, [1, 0]);
        let (p, _) = max_pool_over_time(&t(1, 3, &[-1.0, 0.5, 2.0]));
        assert_eq!(p.data(), &[-1.0, 0.5, 2.0]);
        let (p, _) = max_pool_over_time(&t(3, 1, &[-5.0, -2.0, -3.0]));
        assert_eq!(p.data(), &[-2.0]);
    }

    #[test]
    fn ties_route_to_earliest() {
        let (_, idx) = max_pool_over_time(&t(3, 1, &[1.0, 7.0, 7.0]));
        assert_eq!(idx, [1]);
        let g = max_pool_backward(&t(1, 1, &[2.5]), &idx, 3);
        assert_eq!(g.data(), &[0.0, 2.5, 0.0]);
    }

    struct PoolProbe {
        map: Tensor2<f64>,
        proj: Vec<f64>,
    }

    impl GradientCheck for PoolProbe {
        fn tensors(&mut self) -> Vec<&mut [f64]> {
            vec![self.map.data_mut()]
        }
        fn loss(&mut self) -> f64 {
            let (p, _) = max_pool_over_time(&self.map);
            p.data().iter().zip(&self.proj).map(|(a, b)| a * b).sum()
        }
        fn gradients(&mut self) -> Vec<Vec<f64>> {
            let (_, idx) = max_pool_over_time(&self.map);
            let g = Tensor2::row_vector(self.proj.clone()).unwrap();
            vec![max_pool_backward(&g, &idx, self.map.rows()).into_data()]
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let map = t(
            4,
            3,
            &[0.1, -0.4, 0.9, 0.7, 0.2, -0.3, -0.2, 0.8, 0.5, 0.3, 0.6, 0.0],
        );
        let mut probe = PoolProbe {
            map,
            proj: vec![1.5, -0.5, 2.0],
        };
        assert!(gradient_check(&mut probe, 1e-5) < 1e-6);
    }
}
