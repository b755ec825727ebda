use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig<T = f64> {
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
}

impl<T: Real> Default for AdamConfig<T> {
    fn default() -> Self {
        Self {
            learning_rate: T::lit(1e-3),
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            epsilon: T::lit(1e-8),
        }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdamState<T = f64> {
    pub first_moment: Vec<T>,
    pub second_moment: Vec<T>,
    pub step: u32,
}

impl<T: Real> AdamState<T> {
    pub fn new(len: usize) -> Self {
        Self {
            first_moment: vec![T::zero(); len],
            second_moment: vec![T::zero(); len],
            step: 0,
        }
    }
}

/// One bias-corrected ADAM update. Parameters are left untouched if any
/// gradient entry is non-finite.
pub fn adam_step<T: Real>(params: &mut [T], grads: &[T], state: &mut AdamState<T>, cfg: &AdamConfig<T>) -> Result<()> {
    if params.len() != grads.len() || state.first_moment.len() != params.len() {
        return Err(Error::Contract(format!(
            "ADAM shapes differ: {} params, {} grads, {} moments",
            params.len(),
            grads.len(),
            state.first_moment.len()
        )));
    }
    if let Some((i, g)) = grads.iter().enumerate().find(|(_, g)| !g.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite gradient {g} at parameter {i} (step {})",
            state.step + 1
        )));
    }
    state.step += 1;
    let one = T::one();
    let bc1 = one - cfg.beta1.powi(state.step as i32);
    let bc2 = one - cfg.beta2.powi(state.step as i32);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.first_moment.iter_mut())
        .zip(state.second_moment.iter_mut())
    {
        *m = cfg.beta1 * *m + (one - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (one - cfg.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_keeps_params_and_decays_moments() {
        let cfg = AdamConfig::<f64>::default();
        let mut params = vec![1.0, -2.0];
        let mut state = AdamState::new(2);
        adam_step(&mut params, &[0.0, 0.0], &mut state, &cfg).unwrap();
        assert_eq!(params, vec![1.0, -2.0]);

        adam_step(&mut params, &[3.0, -1.0], &mut state, &cfg).unwrap();
        let (m, v) = (state.first_moment.clone(), state.second_moment.clone());
        adam_step(&mut params, &[0.0, 0.0], &mut state, &cfg).unwrap();
        for k in 0..2 {
            assert!((state.first_moment[k] - 0.9 * m[k]).abs() < 1e-15);
            assert!((state.second_moment[k] - 0.999 * v[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = AdamConfig::<f64>::default();
        for g in [1e-3, 0.5, 40.0] {
            let mut p = vec![0.0];
            let mut state = AdamState::new(1);
            adam_step(&mut p, &[g], &mut state, &cfg).unwrap();
            assert!((p[0].abs() - 1e-3).abs() < 1e-8, "g = {g}, step = {}", p[0]);
        }
    }

    #[test]
    fn quadratic_bowl_converges() {
        let cfg = AdamConfig {
            learning_rate: 0.05,
            ..AdamConfig::default()
        };
        let mut x = vec![5.0];
        let mut state = AdamState::new(1);
        for _ in 0..2000 {
            let g = 2.0 * x[0];
            adam_step(&mut x, &[g], &mut state, &cfg).unwrap();
        }
        assert!(x[0] * x[0] < 1e-3, "x = {}", x[0]);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut p = vec![1.0, 2.0];
        let mut state = AdamState::new(2);
        let err = adam_step(&mut p, &[0.1, f64::NAN], &mut state, &AdamConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
        assert_eq!(p, vec![1.0, 2.0]);
        assert_eq!(state.step, 0);
    }
}
