use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Seeded uniform train/test partition of `0..n`. Both lists are sorted.
/// The train side gets `round(n * fraction)` nodes, kept within `1..n`.
pub fn split_nodes(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Parameter(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    if n < 2 {
        return Err(Error::Parameter(format!("cannot split {n} nodes")));
    }
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let k = ((n as f64 * train_fraction).round() as usize).clamp(1, n - 1);
    let mut train = ids[..k].to_vec();
    let mut test = ids[k..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_sizes() {
        let (train, test) = split_nodes(5000, 0.6, 0).unwrap();
        assert_eq!((train.len(), test.len()), (3000, 2000));
    }

    #[test]
    fn repeatable() {
        assert_eq!(split_nodes(10, 0.5, 4).unwrap(), split_nodes(10, 0.5, 4).unwrap());
        assert_ne!(split_nodes(100, 0.5, 4).unwrap(), split_nodes(100, 0.5, 5).unwrap());
    }

    #[test]
    fn rejects_bad_fraction() {
        assert!(split_nodes(10, 0.0, 0).is_err());
        assert!(split_nodes(10, 1.0, 0).is_err());
        assert!(split_nodes(1, 0.5, 0).is_err());
    }

    proptest! {
        #[test]
        fn disjoint_and_exhaustive(n in 2usize..400, f in 0.01f64..0.99, seed in any::<u64>()) {
            let (train, test) = split_nodes(n, f, seed).unwrap();
            let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert!(!train.is_empty() && !test.is_empty());
        }
    }
}
