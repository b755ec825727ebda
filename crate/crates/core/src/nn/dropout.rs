use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Inverted-dropout mask: each entry is `0` or `1 / (1 - rate)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask<T = f64> {
    scale: Vec<T>,
    rate: f64,
    seed: Option<u64>,
}

impl<T: Real> DropoutMask<T> {
    /// Mask drawn from its own seeded stream.
    pub fn sample(len: usize, rate: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mask = Self::from_rng(len, rate, &mut rng)?;
        mask.seed = Some(seed);
        Ok(mask)
    }

    /// Mask drawn from a caller-owned stream.
    pub fn from_rng<R: Rng>(len: usize, rate: f64, rng: &mut R) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Parameter(format!("dropout rate {rate} outside [0, 1)")));
        }
        let keep = T::lit(1.0 / (1.0 - rate));
        let scale = if rate == 0.0 {
            vec![T::one(); len]
        } else {
            (0..len)
                .map(|_| if rng.gen::<f64>() < rate { T::zero() } else { keep })
                .collect()
        };
        Ok(Self { scale, rate, seed: None })
    }

    pub fn from_scale(scale: Vec<T>, rate: f64) -> Self {
        Self { scale, rate, seed: None }
    }

    pub fn scale(&self) -> &[T] {
        &self.scale
    }

    pub fn len(&self) -> usize {
        self.scale.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scale.is_empty()
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Multiplies `values` in place.
    pub fn apply_in_place(&self, values: &mut [T]) -> Result<()> {
        if values.len() != self.scale.len() {
            return Err(Error::Contract(format!(
                "dropout mask of length {} applied to {} values",
                self.scale.len(),
                values.len()
            )));
        }
        for (x, &s) in values.iter_mut().zip(&self.scale) {
            *x *= s;
        }
        Ok(())
    }
}

pub fn apply_dropout<T: Real>(values: &[T], mask: &DropoutMask<T>) -> Result<Vec<T>> {
    let mut out = values.to_vec();
    mask.apply_in_place(&mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_is_identity() {
        let v = vec![1.5, -2.0, 0.25];
        let mask = DropoutMask::sample(3, 0.0, 9).unwrap();
        assert_eq!(apply_dropout(&v, &mask).unwrap(), v);
    }

    #[test]
    fn all_dropped_mask_zeroes() {
        let mask = DropoutMask::from_scale(vec![0.0; 4], 0.9);
        assert_eq!(apply_dropout(&[1.0, 2.0, 3.0, 4.0], &mask).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn reproducible_from_seed() {
        let a = DropoutMask::<f64>::sample(100, 0.5, 42).unwrap();
        let b = DropoutMask::<f64>::sample(100, 0.5, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.seed(), Some(42));
        assert!(a.scale().iter().all(|&s| s == 0.0 || s == 2.0));
    }

    #[test]
    fn expectation_preserved() {
        let samples = 100_000;
        let value = 0.7;
        let mask = DropoutMask::<f64>::sample(samples, 0.5, 1).unwrap();
        let masked = apply_dropout(&vec![value; samples], &mask).unwrap();
        let mean = masked.iter().sum::<f64>() / samples as f64;
        assert!((mean - value).abs() <= 0.02 * value, "mean {mean}");
    }

    #[test]
    fn contract_errors() {
        assert!(DropoutMask::<f64>::sample(3, 1.0, 0).is_err());
        let mask = DropoutMask::<f64>::sample(3, 0.5, 0).unwrap();
        assert!(apply_dropout(&[1.0], &mask).is_err());
    }
}
