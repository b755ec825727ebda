use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::McSettings;
use crate::error::Result;
use crate::graph::{compute_features, Graph};
use crate::robustness::{criticality_scores, CriticalityResult};
use crate::sage::{mc_dropout_predict, ModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Benchmark {
    pub nodes: usize,
    /// Rayon threads available to both sides.
    pub threads: usize,
    pub mc_samples: usize,
    pub oracle_seconds: f64,
    pub inference_seconds: f64,
    pub ratio: f64,
}

pub fn time_oracle(g: &Graph<f64>) -> Result<(f64, CriticalityResult<f64>)> {
    let clock = Instant::now();
    let truth = criticality_scores(g)?;
    Ok((clock.elapsed().as_secs_f64(), truth))
}

/// Features plus one MC-dropout prediction over every node.
pub fn time_inference(g: &Graph<f64>, params: &ModelParams<f64>, mc: &McSettings, seed: u64) -> Result<f64> {
    let clock = Instant::now();
    let x = compute_features(g);
    mc_dropout_predict(g, &x, params, mc.samples, mc.dropout_rate, seed)?;
    Ok(clock.elapsed().as_secs_f64())
}

impl Benchmark {
    pub fn from_times(g: &Graph<f64>, mc: &McSettings, oracle_seconds: f64, inference_seconds: f64) -> Self {
        Self {
            nodes: g.node_count(),
            threads: rayon::current_num_threads(),
            mc_samples: mc.samples,
            oracle_seconds,
            inference_seconds,
            ratio: oracle_seconds / inference_seconds.max(f64::MIN_POSITIVE),
        }
    }
}

/// Wall-clock of the full oracle against model inference on the same
/// graph and thread pool.
pub fn benchmark_speedup(
    g: &Graph<f64>,
    params: &ModelParams<f64>,
    mc: &McSettings,
    seed: u64,
) -> Result<(Benchmark, CriticalityResult<f64>)> {
    let (oracle, truth) = time_oracle(g)?;
    let inference = time_inference(g, params, mc, seed)?;
    Ok((Benchmark::from_times(g, mc, oracle, inference), truth))
}
