//! Graph estimation from node embeddings.
//!
//! Pairwise squared embedding distances act as a smoothness cost; the
//! learned adjacency trades that cost against a log-degree barrier and a
//! Frobenius penalty, and is then thresholded into a sparse [`Graph`].
//!
//! [`Graph`]: crate::graph::Graph

mod distance;
mod solver;
mod sparsify;

pub use distance::{distance_matrix, DistanceMatrix};
pub use solver::{learn_graph_map, write_trace_csv, GraphLearnConfig, LearnedAdjacency, StopReason, TraceRow};
pub use sparsify::{sparsify_to_graph, SparseGraph};
