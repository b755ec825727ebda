use ndarray::{Array2, ArrayView2, Axis};

use super::Graph;
use crate::scalar::Real;

/// Per-node input features: `[weighted degree, average neighbor degree]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFeatures<T = f64> {
    values: Array2<T>,
}

impl<T: Real> NodeFeatures<T> {
    pub const DIM: usize = 2;

    pub fn from_matrix(values: Array2<T>) -> Self {
        Self { values }
    }

    pub fn view(&self) -> ArrayView2<'_, T> {
        self.values.view()
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn into_inner(self) -> Array2<T> {
        self.values
    }

    /// Per-column min-max scaling to `[0, 1]`; constant columns map to 0.
    pub fn min_max_scaled(mut self) -> Self {
        for mut col in self.values.axis_iter_mut(Axis(1)) {
            let lo = col.iter().copied().fold(T::infinity(), T::min);
            let hi = col.iter().copied().fold(T::neg_infinity(), T::max);
            let range = hi - lo;
            if range > T::zero() {
                col.mapv_inplace(|x| (x - lo) / range);
            } else {
                col.fill(T::zero());
            }
        }
        self
    }
}

/// Unscaled features. Isolated nodes get an average neighbor degree of 0.
pub fn raw_features<T: Real>(g: &Graph<T>) -> NodeFeatures<T> {
    let n = g.node_count();
    let degree: Vec<T> = (0..n).map(|v| g.weighted_degree(v)).collect();
    let mut values = Array2::zeros((n, NodeFeatures::<T>::DIM));
    for v in 0..n {
        values[[v, 0]] = degree[v];
        let nb = g.neighbors(v);
        if !nb.is_empty() {
            let sum: T = nb.iter().map(|&(u, _)| degree[u]).sum();
            values[[v, 1]] = sum / T::from_usize_lossy(nb.len());
        }
    }
    NodeFeatures { values }
}

/// Model input features: [`raw_features`] followed by min-max scaling.
pub fn compute_features<T: Real>(g: &Graph<T>) -> NodeFeatures<T> {
    raw_features(g).min_max_scaled()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::{complete, star};
    use crate::graph::generate_power_law_cluster;

    #[test]
    fn star_and_triangle() {
        let f = raw_features(&star(5));
        assert_eq!(f.view().row(0).to_vec(), vec![4.0, 1.0]);
        for leaf in 1..5 {
            assert_eq!(f.view().row(leaf).to_vec(), vec![1.0, 4.0]);
        }
        let k3 = raw_features(&complete(3));
        assert!(k3.view().iter().all(|&x| x == 2.0));
        let scaled = compute_features(&complete(3));
        assert!(scaled.view().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn column_sums_match_dense_products() {
        let g = generate_power_law_cluster::<f64>(60, 2, 0.4, 8).unwrap();
        let n = g.node_count();
        let mut a = Array2::<f64>::zeros((n, n));
        for (u, v, w) in g.edges() {
            a[[u, v]] = w;
            a[[v, u]] = w;
        }
        let deg = a.sum_axis(Axis(1));
        let binary = a.mapv(|x| if x > 0.0 { 1.0 } else { 0.0 });
        let nb_sum = binary.dot(&deg);
        let count = binary.sum_axis(Axis(1));
        let avg = &nb_sum / &count;

        let f = raw_features(&g);
        let col0: f64 = f.view().column(0).sum();
        let col1: f64 = f.view().column(1).sum();
        assert!((col0 - deg.sum()).abs() < 1e-9);
        assert!((col1 - avg.sum()).abs() < 1e-9);
        // Unit weights: weighted degree is the integer degree.
        for v in 0..n {
            assert_eq!(f.view()[[v, 0]], g.degree(v) as f64);
        }
    }

    #[test]
    fn scaled_features_in_unit_interval() {
        let g = generate_power_law_cluster::<f64>(200, 1, 0.0, 2).unwrap();
        let f = compute_features(&g);
        assert_eq!(f.rows(), 200);
        assert!(f.view().iter().all(|&x| (0.0..=1.0).contains(&x)));
    }
}
