use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Probabilities below this are clamped before taking the log.
const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CrossEntropy<T = f64> {
    pub loss: T,
    /// Gradient with respect to the softmax logits.
    pub grad_logits: Array1<T>,
    /// The true-class probability was below the floor.
    pub clamped: bool,
}

/// `-w_c log p_c`, with gradient `w_c (p - onehot_c)` on the logits.
pub fn weighted_cross_entropy<T: Real>(
    probs: ArrayView1<'_, T>,
    true_class: usize,
    class_weights: &[T],
) -> Result<CrossEntropy<T>> {
    if true_class >= probs.len() || class_weights.len() != probs.len() {
        return Err(Error::Contract(format!(
            "class {true_class} with {} probabilities and {} weights",
            probs.len(),
            class_weights.len()
        )));
    }
    let w = class_weights[true_class];
    let p = probs[true_class];
    let floor = T::lit(PROB_FLOOR);
    let clamped = p < floor;
    if clamped {
        log::debug!("clamping true-class probability {p} before log");
    }
    let loss = -w * p.max(floor).ln();
    let mut grad_logits = probs.mapv(|x| w * x);
    grad_logits[true_class] -= w;
    Ok(CrossEntropy {
        loss,
        grad_logits,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{finite_difference_gradient, softmax};
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn analytic_values() {
        let ce = weighted_cross_entropy(array![0.5, 0.25, 0.25].view(), 0, &[100.0, 50.0, 1.0]).unwrap();
        assert!((ce.loss - 100.0 * 2f64.ln()).abs() < 1e-12);
        assert!((ce.loss - 69.3147).abs() < 1e-4);
        assert!(!ce.clamped);

        let ce = weighted_cross_entropy(array![0.0, 1.0, 0.0].view(), 1, &[3.0, 7.0, 1.0]).unwrap();
        assert_eq!(ce.loss, 0.0);

        let ce = weighted_cross_entropy(array![1.0f64, 0.0, 0.0].view(), 2, &[1.0, 1.0, 1.0]).unwrap();
        assert!(ce.clamped);
        assert!(ce.loss.is_finite());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let weights = [100.0, 50.0, 1.0];
        for trial in 0..10 {
            let logits: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let class = trial % 3;
            let ce = weighted_cross_entropy(softmax(Array1::from(logits.clone()).view()).view(), class, &weights).unwrap();
            let numeric = finite_difference_gradient(
                |z: &[f64]| {
                    let p = softmax(Array1::from(z.to_vec()).view());
                    weighted_cross_entropy(p.view(), class, &weights).unwrap().loss
                },
                &logits,
                1e-5,
            );
            for (a, n) in ce.grad_logits.iter().zip(&numeric) {
                assert!((a - n).abs() <= 1e-6 * a.abs().max(n.abs()).max(1.0), "{a} vs {n}");
            }
        }
    }

    #[test]
    fn loss_nonnegative() {
        let ce = weighted_cross_entropy(array![0.2f32, 0.3, 0.5].view(), 2, &[1.0, 1.0, 2.0]).unwrap();
        assert!(ce.loss > 0.0);
        assert!(weighted_cross_entropy(array![0.2, 0.8].view(), 2, &[1.0, 1.0]).is_err());
    }
}
