//! End-to-end orchestration, splits, metrics and timing.

mod benchmark;
mod config;
mod metrics;
mod run;
mod split;

pub use benchmark::{benchmark_speedup, time_inference, time_oracle, Benchmark};
pub use config::{ExperimentConfig, GeneratorConfig, GraphStageSettings, McSettings, TrainSettings};
pub use metrics::{evaluate, evaluate_numbers, Metrics};
pub use run::{
    bilgr_inference, estimate_graph, observed_graph, run_bilgr, run_bilgr_on, write_json, write_loss_csv, write_split_csv, EvalReport, GraphEstimate,
    GraphEstimateSummary, NoiseReport, RunOutcome, Timings, TrainSummary,
};
pub use split::split_nodes;
