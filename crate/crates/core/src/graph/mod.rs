//! Undirected weighted graphs, generators, node features and file I/O.

mod features;
mod generate;
mod io;

pub use features::{compute_features, raw_features, NodeFeatures};
pub use generate::{add_noise_links, generate_power_law_cluster, NoisyGraph};
pub use io::{load_edge_list, read_edge_list, save_edge_list, write_edge_list, GraphJson};

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Undirected simple graph with positive edge weights on dense ids `0..N`.
///
/// Adjacency lists are kept sorted by neighbor id, which makes equality
/// structural and iteration order deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph<T = f64> {
    adjacency: Vec<Vec<(usize, T)>>,
    edge_count: usize,
}

impl<T: Real> Graph<T> {
    pub fn new(node_count: usize) -> Self {
        Self {
            adjacency: vec![Vec::new(); node_count],
            edge_count: 0,
        }
    }

    /// Builds a graph from `(u, v, w)` triples, rejecting anything that
    /// breaks the simple-graph invariants.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut g = Self::new(node_count);
        for (u, v, w) in edges {
            g.add_edge(u, v, w)?;
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, T)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn weighted_degree(&self, v: usize) -> T {
        self.adjacency[v].iter().map(|&(_, w)| w).sum()
    }

    pub fn edge_weight(&self, u: usize, v: usize) -> Option<T> {
        let row = self.adjacency.get(u)?;
        row.binary_search_by_key(&v, |&(n, _)| n)
            .ok()
            .map(|i| row[i].1)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_weight(u, v).is_some()
    }

    /// Inserts an undirected edge. Self-loops, duplicates and non-positive or
    /// non-finite weights are rejected.
    pub fn add_edge(&mut self, u: usize, v: usize, w: T) -> Result<()> {
        let n = self.node_count();
        for idx in [u, v] {
            if idx >= n {
                return Err(Error::Index { index: idx, nodes: n });
            }
        }
        if u == v {
            return Err(Error::Contract(format!("self-loop on node {u}")));
        }
        if !(w > T::zero()) || !w.is_finite() {
            return Err(Error::Contract(format!(
                "edge ({u}, {v}) has invalid weight {w}"
            )));
        }
        let pos_u = match self.adjacency[u].binary_search_by_key(&v, |&(x, _)| x) {
            Ok(_) => return Err(Error::Contract(format!("duplicate edge ({u}, {v})"))),
            Err(p) => p,
        };
        self.adjacency[u].insert(pos_u, (v, w));
        let pos_v = self.adjacency[v]
            .binary_search_by_key(&u, |&(x, _)| x)
            .unwrap_err();
        self.adjacency[v].insert(pos_v, (u, w));
        self.edge_count += 1;
        Ok(())
    }

    /// Each edge once, as `(u, v, w)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, row)| {
            row.iter()
                .filter(move |&&(v, _)| u < v)
                .map(move |&(v, w)| (u, v, w))
        })
    }

    /// Deletes `v` and its incident edges. Remaining ids are compacted in
    /// order; the returned map sends old ids to new ids (`None` for `v`).
    pub fn remove_node(&self, v: usize) -> Result<(Self, Vec<Option<usize>>)> {
        let n = self.node_count();
        if v >= n {
            return Err(Error::Index { index: v, nodes: n });
        }
        let mapping: Vec<Option<usize>> = (0..n)
            .map(|i| match i.cmp(&v) {
                std::cmp::Ordering::Less => Some(i),
                std::cmp::Ordering::Equal => None,
                std::cmp::Ordering::Greater => Some(i - 1),
            })
            .collect();
        let adjacency: Vec<Vec<(usize, T)>> = self
            .adjacency
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != v)
            .map(|(_, row)| {
                row.iter()
                    .filter_map(|&(u, w)| mapping[u].map(|nu| (nu, w)))
                    .collect()
            })
            .collect();
        Ok((
            Self {
                adjacency,
                edge_count: self.edge_count - self.degree(v),
            },
            mapping,
        ))
    }

    /// Component id per node, numbered in order of first appearance.
    pub fn connected_components(&self) -> (usize, Vec<usize>) {
        let n = self.node_count();
        let mut comp = vec![usize::MAX; n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = count;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &(v, _) in &self.adjacency[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = count;
                        queue.push_back(v);
                    }
                }
            }
            count += 1;
        }
        (count, comp)
    }

    pub fn is_connected(&self) -> bool {
        self.connected_components().0 <= 1
    }

    /// Hop distances from `source`; `usize::MAX` marks unreachable nodes.
    pub fn bfs_distances(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.node_count()];
        let mut queue = VecDeque::from([source]);
        dist[source] = 0;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adjacency[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Relabels nodes: node `i` becomes `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let n = self.node_count();
        if perm.len() != n {
            return Err(Error::Contract("permutation length mismatch".into()));
        }
        let mut g = Self::new(n);
        for (u, v, w) in self.edges() {
            g.add_edge(perm[u], perm[v], w)?;
        }
        Ok(g)
    }

    /// Copies the graph into another scalar type.
    pub fn cast<U: Real>(&self) -> Graph<U> {
        Graph {
            adjacency: self
                .adjacency
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&(v, w)| (v, U::lit(w.as_f64())))
                        .collect()
                })
                .collect(),
            edge_count: self.edge_count,
        }
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn rejects_invalid_edges() {
        let mut g = Graph::<f64>::new(3);
        assert!(matches!(g.add_edge(0, 0, 1.0), Err(Error::Contract(_))));
        assert!(matches!(g.add_edge(0, 3, 1.0), Err(Error::Index { .. })));
        assert!(g.add_edge(0, 1, 0.0).is_err());
        assert!(g.add_edge(0, 1, f64::NAN).is_err());
        g.add_edge(0, 1, 2.0).unwrap();
        assert!(g.add_edge(1, 0, 2.0).is_err());
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edge_weight(1, 0), Some(2.0));
    }

    #[test]
    fn remove_node_examples() {
        let (p2, map) = complete(3).remove_node(1).unwrap();
        assert_eq!(p2, path(2));
        assert_eq!(map, vec![Some(0), None, Some(1)]);

        let (isolated, _) = star(5).remove_node(0).unwrap();
        assert_eq!(isolated.node_count(), 4);
        assert_eq!(isolated.edge_count(), 0);

        let (s4, _) = star(5).remove_node(3).unwrap();
        assert_eq!(s4, star(4));

        assert!(matches!(
            star(5).remove_node(5),
            Err(Error::Index { index: 5, nodes: 5 })
        ));
    }

    #[test]
    fn symmetric_adjacency_and_edge_count() {
        let g = complete(5);
        let entries: usize = (0..5).map(|v| g.degree(v)).sum();
        assert_eq!(entries, 2 * g.edge_count());
        for (u, v, w) in g.edges() {
            assert_eq!(g.edge_weight(v, u), Some(w));
        }
    }

    #[test]
    fn components() {
        let g = Graph::from_edges(5, [(0, 1, 1.0), (3, 4, 1.0)]).unwrap();
        let (c, comp) = g.connected_components();
        assert_eq!(c, 3);
        assert_eq!(comp, vec![0, 0, 1, 2, 2]);
        assert!(path(4).is_connected());
    }
}
