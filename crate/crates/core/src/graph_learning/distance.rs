use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Squared Euclidean distances between node embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix<T = f64> {
    values: Array2<T>,
}

impl<T: Real> DistanceMatrix<T> {
    /// Validates symmetry, a zero diagonal and nonnegative finite entries.
    pub fn from_matrix(values: Array2<T>) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(Error::Contract("distance matrix must be square".into()));
        }
        for i in 0..n {
            if values[[i, i]] != T::zero() {
                return Err(Error::Contract(format!("nonzero diagonal at {i}")));
            }
            for j in i + 1..n {
                let z = values[[i, j]];
                if !(z >= T::zero()) || !z.is_finite() || z != values[[j, i]] {
                    return Err(Error::Contract(format!("invalid distance entry ({i}, {j})")));
                }
            }
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn view(&self) -> ArrayView2<'_, T> {
        self.values.view()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[[i, j]]
    }

    pub fn into_inner(self) -> Array2<T> {
        self.values
    }

    /// Mean over the off-diagonal entries.
    pub fn mean_off_diagonal(&self) -> T {
        let n = self.len();
        if n < 2 {
            return T::zero();
        }
        let mut total = T::zero();
        for i in 0..n {
            for j in i + 1..n {
                total += self.values[[i, j]];
            }
        }
        total / T::from_usize_lossy(n * (n - 1) / 2)
    }

    /// Every entry multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        if !(factor > T::zero()) || !factor.is_finite() {
            return Err(Error::Parameter(format!("scale factor {factor} must be positive")));
        }
        Ok(Self {
            values: self.values.mapv(|z| z * factor),
        })
    }
}

pub fn distance_matrix<T: Real>(embeddings: ArrayView2<'_, T>) -> Result<DistanceMatrix<T>> {
    let n = embeddings.nrows();
    if n < 2 {
        return Err(Error::Parameter(format!("need at least two embeddings, got {n}")));
    }
    let mut z = Array2::zeros((n, n));
    for i in 0..n {
        let a = embeddings.row(i);
        for j in i + 1..n {
            let b = embeddings.row(j);
            let d = a.iter().zip(b.iter()).map(|(&x, &y)| (x - y) * (x - y)).sum::<T>();
            z[[i, j]] = d;
            z[[j, i]] = d;
        }
    }
    DistanceMatrix::from_matrix(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_rows_give_zero() {
        let e = Array2::from_elem((4, 16), 0.3f64);
        let z = distance_matrix(e.view()).unwrap();
        assert!(z.view().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_vectors() {
        let e = array![[0.0f64, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let z = distance_matrix(e.view()).unwrap();
        assert_eq!(z.get(0, 1), 1.0);
        assert_eq!(z.get(0, 2), 1.0);
        assert_eq!(z.get(1, 2), 2.0);
        assert_eq!(z.get(2, 1), 2.0);
    }

    #[test]
    fn matches_naive_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let e = Array2::from_shape_simple_fn((12, 16), || rng.gen_range(-2.0..2.0f64));
        let z = distance_matrix(e.view()).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                let mut d = 0.0;
                for k in 0..16 {
                    d += (e[[i, k]] - e[[j, k]]).powi(2);
                }
                assert!((z.get(i, j) - d).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_single_row_and_bad_matrices() {
        assert!(distance_matrix(Array2::<f64>::zeros((1, 16)).view()).is_err());
        assert!(DistanceMatrix::from_matrix(array![[0.0, 1.0], [2.0, 0.0]]).is_err());
        assert!(DistanceMatrix::from_matrix(array![[0.0, -1.0], [-1.0, 0.0]]).is_err());
        assert!(DistanceMatrix::from_matrix(array![[1.0, 1.0], [1.0, 0.0]]).is_err());
    }
}
