use super::solver::LearnedAdjacency;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scalar::Real;

/// Thresholded graph plus the nodes left without edges.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph<T = f64> {
    pub graph: Graph<T>,
    pub isolated: Vec<usize>,
    pub threshold: T,
}

/// Drops every weight below `ratio * max(A)` and keeps the rest as
/// weighted edges.
pub fn sparsify_to_graph<T: Real>(adj: &LearnedAdjacency<T>, ratio: f64) -> Result<SparseGraph<T>> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(Error::Parameter(format!("sparsify ratio {ratio} outside [0, 1)")));
    }
    let w = &adj.weights;
    let n = w.nrows();
    let max = w.iter().copied().fold(T::zero(), T::max);
    let threshold = T::lit(ratio) * max;
    let mut graph = Graph::new(n);
    for i in 0..n {
        for j in i + 1..n {
            let a = w[[i, j]];
            if a > T::zero() && a >= threshold {
                graph.add_edge(i, j, a)?;
            }
        }
    }
    if graph.edge_count() == 0 {
        return Err(Error::Degenerate("graph estimation produced no edges".into()));
    }
    let isolated: Vec<usize> = (0..n).filter(|&v| graph.degree(v) == 0).collect();
    if !isolated.is_empty() {
        log::warn!("{} isolated nodes after sparsification", isolated.len());
    }
    Ok(SparseGraph {
        graph,
        isolated,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn adjacency(weights: Array2<f64>) -> LearnedAdjacency<f64> {
        LearnedAdjacency::from_weights(weights).unwrap()
    }

    #[test]
    fn zero_ratio_keeps_positive_entries() {
        let a = adjacency(array![[0.0, 0.2, 0.0], [0.2, 0.0, 1e-9], [0.0, 1e-9, 0.0]]);
        let s = sparsify_to_graph(&a, 0.0).unwrap();
        assert_eq!(s.graph.edge_count(), 2);
        assert!(s.isolated.is_empty());
    }

    #[test]
    fn uniform_weights_survive_any_ratio() {
        let mut w = Array2::from_elem((5, 5), 0.4);
        w.diag_mut().fill(0.0);
        let s = sparsify_to_graph(&adjacency(w), 0.5).unwrap();
        assert_eq!(s.graph.edge_count(), 10);
        assert_eq!(s.graph.edge_weight(0, 3), Some(0.4));
    }

    #[test]
    fn reports_isolated_nodes() {
        let a = adjacency(array![
            [0.0, 1.0, 0.01, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.01, 0.0, 0.0, 0.5],
            [0.0, 0.0, 0.5, 0.0]
        ]);
        let s = sparsify_to_graph(&a, 0.6).unwrap();
        assert_eq!(s.graph.edge_count(), 1);
        assert_eq!(s.isolated, vec![2, 3]);
    }

    #[test]
    fn ratio_validated() {
        let a = adjacency(array![[0.0, 1.0], [1.0, 0.0]]);
        assert!(sparsify_to_graph(&a, 1.0).is_err());
        assert!(sparsify_to_graph(&a, -0.1).is_err());
    }
}
