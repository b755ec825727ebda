//! Fast identification of critical nodes in uncertain networks.
//!
//! The crate computes exact node criticality from effective graph
//! resistance, trains an inductive GraphSAGE classifier on a labeled subset
//! of nodes, re-estimates the graph from learned embeddings by smooth-signal
//! graph learning, and predicts criticality classes with MC-dropout
//! uncertainty.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod error;
pub mod graph;
pub mod graph_learning;
pub mod nn;
pub mod pipeline;
pub mod robustness;
pub mod sage;
pub mod scalar;

pub use error::{Error, Result};
pub use robustness::Class;
pub use scalar::Real;

pub type Graph64 = graph::Graph<f64>;
pub type Graph32 = graph::Graph<f32>;
pub type NodeFeatures64 = graph::NodeFeatures<f64>;
pub type CriticalityResult64 = robustness::CriticalityResult<f64>;
pub type ModelParams64 = sage::ModelParams<f64>;
pub type ModelParams32 = sage::ModelParams<f32>;
pub type McPrediction64 = sage::McPrediction<f64>;
pub type DistanceMatrix64 = graph_learning::DistanceMatrix<f64>;
pub type LearnedAdjacency64 = graph_learning::LearnedAdjacency<f64>;
