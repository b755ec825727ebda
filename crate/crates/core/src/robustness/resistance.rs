use ndarray::Array2;

use super::eigen::{packed_eigenvalues, symmetric_eigen, Spectrum};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scalar::Real;

/// `L = D - A` with `D` the weighted degree diagonal.
pub fn laplacian_matrix<T: Real>(g: &Graph<T>) -> Array2<T> {
    let n = g.node_count();
    let mut l = Array2::zeros((n, n));
    for v in 0..n {
        for &(u, w) in g.neighbors(v) {
            l[[v, u]] = -w;
            l[[v, v]] += w;
        }
    }
    l
}

/// `2 / (N - 1) * sum(1 / lambda)` over the nonzero Laplacian eigenvalues.
///
/// Disconnected graphs contribute one zero eigenvalue per component, which
/// are excluded; the prefactor keeps the full node count. For a connected
/// graph the value equals the mean effective resistance over all pairs.
///
/// The Laplacian is block diagonal over connected components, so each
/// component is decomposed separately and its single zero eigenvalue
/// (always the smallest) is dropped.
pub fn effective_graph_resistance<T: Real>(g: &Graph<T>) -> Result<T> {
    let n = g.node_count();
    if n < 2 {
        return Err(Error::Domain(format!(
            "effective graph resistance needs at least 2 nodes, got {n}"
        )));
    }
    let (count, comp) = g.connected_components();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (v, &c) in comp.iter().enumerate() {
        members[c].push(v);
    }
    let mut local = vec![usize::MAX; n];
    let mut total = T::zero();
    for nodes in members.iter().filter(|m| m.len() >= 2) {
        for (i, &v) in nodes.iter().enumerate() {
            local[v] = i;
        }
        let k = nodes.len();
        let mut packed = vec![T::zero(); k * (k + 1) / 2];
        for (i, &v) in nodes.iter().enumerate() {
            let row = i * (i + 1) / 2;
            for &(u, w) in g.neighbors(v) {
                let j = local[u];
                if j < i {
                    packed[row + j] = -w;
                }
                packed[row + i] += w;
            }
        }
        let spectrum = packed_eigenvalues(packed, k)?;
        total += spectrum.eigenvalues[1..].iter().map(|&x| x.recip()).sum::<T>();
    }
    Ok(T::lit(2.0) / T::from_usize_lossy(n - 1) * total)
}

/// Same quantity from an already computed whole-graph spectrum, using the
/// spectrum's zero tolerance to discard the component eigenvalues.
pub fn resistance_from_spectrum<T: Real>(spectrum: &Spectrum<T>) -> Result<T> {
    let n = spectrum.len();
    if n < 2 {
        return Err(Error::Domain(format!(
            "effective graph resistance needs at least 2 nodes, got {n}"
        )));
    }
    let sum: T = spectrum.nonzero().map(|x| x.recip()).sum();
    Ok(T::lit(2.0) / T::from_usize_lossy(n - 1) * sum)
}

/// Pairwise effective resistances from the Laplacian pseudoinverse.
#[derive(Debug, Clone)]
pub struct ResistanceOracle<T = f64> {
    pinv: Array2<T>,
    component: Vec<usize>,
}

impl<T: Real> ResistanceOracle<T> {
    pub fn new(g: &Graph<T>) -> Result<Self> {
        let l = laplacian_matrix(g);
        let eig = symmetric_eigen(&l)?;
        let n = g.node_count();
        let largest = eig.values.iter().fold(T::zero(), |a, &x| a.max(x.abs()));
        let tol = T::lit(1e-9) * largest.max(T::one());
        let mut pinv = Array2::zeros((n, n));
        for (k, &lambda) in eig.values.iter().enumerate() {
            if lambda.abs() <= tol {
                continue;
            }
            let v = eig.vectors.column(k);
            let inv = lambda.recip();
            for i in 0..n {
                let vi = v[i] * inv;
                for j in 0..n {
                    pinv[[i, j]] += vi * v[j];
                }
            }
        }
        Ok(Self {
            pinv,
            component: g.connected_components().1,
        })
    }

    /// `L+_ii + L+_jj - 2 L+_ij`, or `+inf` across components.
    pub fn resistance(&self, i: usize, j: usize) -> T {
        if self.component[i] != self.component[j] {
            return T::infinity();
        }
        let p = &self.pinv;
        p[[i, i]] + p[[j, j]] - T::lit(2.0) * p[[i, j]]
    }

    /// Mean resistance over all `N (N - 1) / 2` pairs.
    pub fn mean_resistance(&self) -> T {
        let n = self.component.len();
        let mut sum = T::zero();
        for i in 0..n {
            for j in i + 1..n {
                sum += self.resistance(i, j);
            }
        }
        sum / T::from_usize_lossy(n * (n - 1) / 2)
    }

    pub fn pseudoinverse(&self) -> &Array2<T> {
        &self.pinv
    }
}

/// Effective resistance between `i` and `j`; `+inf` when they lie in
/// different components.
pub fn pairwise_effective_resistance<T: Real>(g: &Graph<T>, i: usize, j: usize) -> Result<T> {
    let n = g.node_count();
    for idx in [i, j] {
        if idx >= n {
            return Err(Error::Index { index: idx, nodes: n });
        }
    }
    Ok(ResistanceOracle::new(g)?.resistance(i, j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::{complete, path, star};
    use crate::graph::{add_noise_links, generate_power_law_cluster};
    use crate::robustness::symmetric_eigenvalues;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn laplacian_examples() {
        assert_eq!(laplacian_matrix(&path(2)), array![[1.0, -1.0], [-1.0, 1.0]]);
        let k3 = laplacian_matrix(&complete(3));
        assert_eq!(k3, array![[2.0, -1.0, -1.0], [-1.0, 2.0, -1.0], [-1.0, -1.0, 2.0]]);
        let w = Graph::from_edges(2, [(0, 1, 3.0)]).unwrap();
        assert_eq!(laplacian_matrix(&w), array![[3.0, -3.0], [-3.0, 3.0]]);
        let l = laplacian_matrix(&star(6));
        for row in l.rows() {
            assert_eq!(row.sum(), 0.0);
        }
    }

    #[test]
    fn analytic_resistances() {
        assert!((effective_graph_resistance(&path(2)).unwrap() - 1.0).abs() < 1e-14);
        assert!((effective_graph_resistance(&complete(3)).unwrap() - 2.0 / 3.0).abs() < 1e-14);
        assert!((pairwise_effective_resistance(&path(2), 0, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!((pairwise_effective_resistance(&complete(3), 0, 2).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((pairwise_effective_resistance(&path(3), 0, 2).unwrap() - 2.0).abs() < 1e-12);
        let split = Graph::<f64>::from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert!(pairwise_effective_resistance(&split, 0, 3).unwrap().is_infinite());
        assert!(matches!(effective_graph_resistance(&Graph::<f64>::new(1)), Err(Error::Domain(_))));
    }

    #[test]
    fn matches_pairwise_oracle_on_generated_graph() {
        let g = generate_power_law_cluster::<f64>(50, 2, 0.3, 1).unwrap();
        let rg = effective_graph_resistance(&g).unwrap();
        let mean = ResistanceOracle::new(&g).unwrap().mean_resistance();
        assert!((rg - mean).abs() <= 1e-8 * mean);
    }

    #[test]
    fn component_route_matches_whole_spectrum() {
        let g = Graph::<f64>::from_edges(7, [(0, 1, 1.0), (1, 2, 2.0), (3, 4, 1.0), (4, 5, 0.5), (5, 3, 1.0)]).unwrap();
        let spectrum = symmetric_eigenvalues(&laplacian_matrix(&g)).unwrap();
        assert_eq!(spectrum.zero_count(), 3);
        let a = effective_graph_resistance(&g).unwrap();
        let b = resistance_from_spectrum(&spectrum).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn single_precision_route() {
        let g = complete(4).cast::<f32>();
        let r = effective_graph_resistance(&g).unwrap();
        assert!((r - 0.5).abs() < 1e-5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn adding_an_edge_never_increases_resistance(n in 5usize..20, seed in 0u64..1000) {
            let g = generate_power_law_cluster::<f64>(n, 1, 0.0, seed).unwrap();
            let denser = add_noise_links(&g, 1.0 / n as f64, seed).unwrap().graph;
            let (before, after) = (ResistanceOracle::new(&g).unwrap(), ResistanceOracle::new(&denser).unwrap());
            for i in 0..n {
                for j in i + 1..n {
                    prop_assert!(after.resistance(i, j) <= before.resistance(i, j) + 1e-10);
                }
            }
            prop_assert!(effective_graph_resistance(&denser).unwrap() <= effective_graph_resistance(&g).unwrap() + 1e-12);
        }

        #[test]
        fn relabeling_preserves_resistance(n in 4usize..25, seed in 0u64..1000) {
            let g = generate_power_law_cluster::<f64>(n, 2.min(n - 1), 0.2, seed).unwrap();
            let perm: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
            prop_assume!({ let mut p = perm.clone(); p.sort(); p.dedup(); p.len() == n });
            let h = g.permute(&perm).unwrap();
            let (a, b) = (effective_graph_resistance(&g).unwrap(), effective_graph_resistance(&h).unwrap());
            prop_assert!((a - b).abs() <= 1e-10 * a);
        }
    }
}
