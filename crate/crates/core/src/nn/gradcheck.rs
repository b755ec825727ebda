use crate::scalar::Real;

/// Gradients smaller than this are compared in absolute terms.
const GRADIENT_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck<T = f64> {
    pub max_relative_error: T,
    pub worst_index: usize,
}

/// `|a - n| / max(|a| + |n|, floor)`.
pub fn relative_error<T: Real>(analytic: T, numeric: T) -> T {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(T::lit(GRADIENT_FLOOR))
}

/// Central differences of `loss` around `params`.
pub fn finite_difference_gradient<T: Real, F>(mut loss: F, params: &[T], step: T) -> Vec<T>
where
    F: FnMut(&[T]) -> T,
{
    let mut probe = params.to_vec();
    (0..params.len())
        .map(|i| {
            let original = probe[i];
            probe[i] = original + step;
            let plus = loss(&probe);
            probe[i] = original - step;
            let minus = loss(&probe);
            probe[i] = original;
            (plus - minus) / (step + step)
        })
        .collect()
}

/// Compares `analytic` against central differences of `loss` (step 1e-5)
/// and reports the largest relative discrepancy.
pub fn gradient_check<T: Real, F>(loss: F, params: &[T], analytic: &[T]) -> GradientCheck<T>
where
    F: FnMut(&[T]) -> T,
{
    assert_eq!(params.len(), analytic.len(), "gradient length mismatch");
    let numeric = finite_difference_gradient(loss, params, T::lit(1e-5));
    let mut worst = GradientCheck {
        max_relative_error: T::zero(),
        worst_index: 0,
    };
    for (i, (&a, &n)) in analytic.iter().zip(&numeric).enumerate() {
        let err = relative_error(a, n);
        if err > worst.max_relative_error || err.is_nan() {
            worst = GradientCheck {
                max_relative_error: err,
                worst_index: i,
            };
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{weighted_cross_entropy, Activation, DenseLayer};
    use ndarray::{Array1, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unpack(layers: &[(usize, usize)], flat: &[f64]) -> Vec<(Array2<f64>, Array1<f64>)> {
        let mut off = 0;
        layers
            .iter()
            .map(|&(o, i)| {
                let w = Array2::from_shape_vec((o, i), flat[off..off + o * i].to_vec()).unwrap();
                off += o * i;
                let b = Array1::from(flat[off..off + o].to_vec());
                off += o;
                (w, b)
            })
            .collect()
    }

    /// Relu stack with a softmax head and weighted CE; returns loss and
    /// the hand-derived gradient.
    fn mlp_loss(shapes: &[(usize, usize)], flat: &[f64], x: &Array1<f64>, class: usize) -> (f64, Vec<f64>) {
        let weights = [100.0, 50.0, 1.0];
        let params = unpack(shapes, flat);
        let mut acts = vec![x.clone()];
        let mut pres = Vec::new();
        for (k, (w, b)) in params.iter().enumerate() {
            let act = if k + 1 == params.len() { Activation::Softmax } else { Activation::Relu };
            let layer = DenseLayer::new(w.clone(), b.clone(), act).unwrap();
            let out = layer.forward(acts.last().unwrap().view()).unwrap();
            pres.push(out.pre_activation);
            acts.push(out.output);
        }
        let ce = weighted_cross_entropy(acts.last().unwrap().view(), class, &weights).unwrap();
        let mut delta = ce.grad_logits;
        let mut grads = vec![Vec::new(); params.len()];
        for k in (0..params.len()).rev() {
            let (w, _) = &params[k];
            let input = &acts[k];
            let gw = Array2::from_shape_fn(w.dim(), |(o, i)| delta[o] * input[i]);
            let mut g = gw.into_raw_vec_and_offset().0;
            g.extend(delta.iter());
            grads[k] = g;
            if k > 0 {
                let back = w.t().dot(&delta);
                delta = Array1::from_shape_fn(back.len(), |i| if pres[k - 1][i] > 0.0 { back[i] } else { 0.0 });
            }
        }
        (ce.loss, grads.concat())
    }

    fn check(shapes: &[(usize, usize)], seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count: usize = shapes.iter().map(|&(o, i)| o * i + o).sum();
        let flat: Vec<f64> = (0..count).map(|_| rng.gen_range(-0.8..0.8)).collect();
        let x = Array1::from_shape_fn(shapes[0].1, |_| rng.gen_range(-1.0..1.0));
        let class = (seed % 3) as usize;
        let (_, analytic) = mlp_loss(shapes, &flat, &x, class);
        gradient_check(|p: &[f64]| mlp_loss(shapes, p, &x, class).0, &flat, &analytic).max_relative_error
    }

    #[test]
    fn single_dense_layer() {
        for seed in 0..5 {
            let err = check(&[(3, 4)], seed);
            assert!(err < 1e-5, "seed {seed}: {err}");
        }
    }

    #[test]
    fn three_layer_relu_stack() {
        for seed in 0..5 {
            let err = check(&[(8, 4), (6, 8), (3, 6)], seed);
            assert!(err < 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn detects_wrong_gradient() {
        let report = gradient_check(|p: &[f64]| p[0] * p[0] + 3.0 * p[1], &[1.0, 2.0], &[2.0, 2.0]);
        assert_eq!(report.worst_index, 1);
        assert!(report.max_relative_error > 0.1);
    }
}
