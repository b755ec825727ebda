use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{stream, ExperimentConfig, GraphStageSettings, McSettings};
use super::metrics::{evaluate, Metrics};
use super::split::split_nodes;
use crate::error::{Error, Result};
use crate::graph::{add_noise_links, compute_features, generate_power_law_cluster, load_edge_list, save_edge_list, Graph};
use crate::graph_learning::{distance_matrix, learn_graph_map, sparsify_to_graph, write_trace_csv, LearnedAdjacency, StopReason};
use crate::robustness::{criticality_scores, write_criticality_csv, Class, CriticalityResult};
use crate::sage::{
    extract_embeddings, mc_dropout_predict, point_predict, save_checkpoint, train_classifier, write_prediction_csv,
    LabeledNode, McPrediction, ModelParams, TrainOutcome,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub epochs: usize,
    pub first_loss: f64,
    pub final_loss: f64,
    pub single_class: bool,
}

impl TrainSummary {
    fn from_outcome(out: &TrainOutcome<f64>) -> Self {
        Self {
            epochs: out.loss_history.len(),
            first_loss: out.loss_history.first().copied().unwrap_or(f64::NAN),
            final_loss: out.loss_history.last().copied().unwrap_or(f64::NAN),
            single_class: out.single_class,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEstimateSummary {
    pub edges: usize,
    pub isolated_nodes: usize,
    pub iterations: usize,
    pub objective: f64,
    pub kkt_residual: f64,
    pub stop: StopReason,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub fraction: f64,
    pub links_added: usize,
    pub observed_edges: usize,
    pub estimate: GraphEstimateSummary,
    pub ensemble: Metrics,
    pub point: Metrics,
    /// Ensemble accuracy of the clean run minus that of this run.
    pub accuracy_drop: f64,
}

/// Everything a run reports except wall-clock times, so two runs with the
/// same configuration serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    pub nodes: usize,
    pub edges: usize,
    pub train_nodes: usize,
    pub test_nodes: usize,
    pub ground_truth_counts: [usize; 3],
    pub test_counts: [usize; 3],
    pub degenerate_scores: bool,
    pub warnings: Vec<String>,
    pub step1: TrainSummary,
    pub graph_estimate: GraphEstimateSummary,
    pub step4: TrainSummary,
    pub mc_samples: usize,
    /// Metrics of the MC-dropout mean prediction.
    pub ensemble: Metrics,
    /// Metrics of the deterministic (dropout off) prediction.
    pub point: Metrics,
    /// Mean over test nodes of the credible half-width of the predicted class.
    pub mean_ci_halfwidth: f64,
    pub noise: Vec<NoiseReport>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub threads: usize,
    pub oracle_seconds: f64,
    pub step1_seconds: f64,
    pub graph_learning_seconds: f64,
    pub step4_seconds: f64,
    pub inference_seconds: f64,
    pub noise_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: EvalReport,
    pub timings: Timings,
    pub truth: CriticalityResult<f64>,
    pub step1: ModelParams<f64>,
    pub step4: ModelParams<f64>,
    pub train_nodes: Vec<usize>,
    pub test_nodes: Vec<usize>,
    pub prediction: McPrediction<f64>,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Stage { .. } => e,
        other => Error::Stage {
            stage: name,
            source: Box::new(other),
        },
    })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// CSV with header `epoch,loss`.
pub fn write_loss_csv(history: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "loss"])?;
    for (e, l) in history.iter().enumerate() {
        w.write_record([(e + 1).to_string(), l.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// CSV with header `node_id,split`.
pub fn write_split_csv(train: &[usize], test: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let mut rows: Vec<(usize, &str)> = train.iter().map(|&v| (v, "train")).chain(test.iter().map(|&v| (v, "test"))).collect();
    rows.sort_unstable();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["node_id", "split"])?;
    for (v, s) in rows {
        w.write_record([v.to_string().as_str(), s])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<S: Serialize>(value: &S, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// The observed graph: loaded when the configuration names a file,
/// generated otherwise.
pub fn observed_graph(cfg: &ExperimentConfig) -> Result<Graph<f64>> {
    match &cfg.graph {
        Some(path) => load_edge_list(path),
        None => generate_power_law_cluster(
            cfg.generator.nodes,
            cfg.generator.edges_per_node,
            cfg.generator.triangle_probability,
            cfg.seed,
        ),
    }
}

/// Graph estimated from a trained model's embeddings of `g`.
#[derive(Debug, Clone)]
pub struct GraphEstimate {
    pub adjacency: LearnedAdjacency<f64>,
    pub graph: Graph<f64>,
    pub summary: GraphEstimateSummary,
}

pub fn estimate_graph(g: &Graph<f64>, params: &ModelParams<f64>, settings: &GraphStageSettings) -> Result<GraphEstimate> {
    let embeddings = extract_embeddings(g, &compute_features(g), params)?;
    let mut z = distance_matrix(embeddings.view())?;
    if settings.normalize_distances {
        let mean = z.mean_off_diagonal();
        if mean > 0.0 {
            z = z.scaled(1.0 / mean)?;
        }
    }
    let adjacency = learn_graph_map(&z, &settings.solver)?;
    let sparse = sparsify_to_graph(&adjacency, settings.solver.sparsify_ratio)?;
    let summary = GraphEstimateSummary {
        edges: sparse.graph.edge_count(),
        isolated_nodes: sparse.isolated.len(),
        iterations: adjacency.iterations,
        objective: adjacency.objective,
        kkt_residual: adjacency.kkt_residual,
        stop: adjacency.stop,
        threshold: sparse.threshold,
    };
    Ok(GraphEstimate {
        adjacency,
        graph: sparse.graph,
        summary,
    })
}

/// Steps 2 to 5 for fixed models: estimate a graph from `g` and run the
/// MC-dropout prediction of `step4` on it.
pub fn bilgr_inference(
    g: &Graph<f64>,
    step1: &ModelParams<f64>,
    step4: &ModelParams<f64>,
    settings: &GraphStageSettings,
    mc: &McSettings,
    seed: u64,
) -> Result<(GraphEstimate, McPrediction<f64>, Vec<Class>)> {
    let est = stage("graph_learning", estimate_graph(g, step1, settings))?;
    let x = compute_features(&est.graph);
    let pred = stage("predict", mc_dropout_predict(&est.graph, &x, step4, mc.samples, mc.dropout_rate, seed))?;
    let (_, point) = stage("predict", point_predict(&est.graph, &x, step4))?;
    Ok((est, pred, point))
}

fn pick<T: Copy>(values: &[T], ids: &[usize]) -> Vec<T> {
    ids.iter().map(|&v| values[v]).collect()
}

/// Full run from the configuration, persisting artifacts to `cfg.out_dir`.
pub fn run_bilgr(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let g = stage("graph", observed_graph(cfg))?;
    run_bilgr_on(cfg, &g, None)
}

/// Full run on a given observed graph. Passing precomputed ground truth
/// skips the oracle.
pub fn run_bilgr_on(cfg: &ExperimentConfig, g: &Graph<f64>, truth: Option<CriticalityResult<f64>>) -> Result<RunOutcome> {
    cfg.validate()?;
    let dir = cfg.out_dir.as_path();
    std::fs::create_dir_all(dir)?;
    let mut timings = Timings {
        threads: rayon::current_num_threads(),
        ..Timings::default()
    };
    let mut warnings = Vec::new();
    stage("graph", save_edge_list(g, dir.join("graph_observed.edges")))?;

    let clock = Instant::now();
    let truth = match truth {
        Some(t) if t.len() == g.node_count() => t,
        Some(_) => return Err(Error::Contract("ground truth does not match the graph".into())),
        None => stage("oracle", criticality_scores(g))?,
    };
    timings.oracle_seconds = clock.elapsed().as_secs_f64();
    if truth.degenerate {
        warnings.push("criticality scores are degenerate: every node labeled class 2".to_string());
    }
    stage("oracle", write_criticality_csv(&truth, create(dir, "criticality.csv")?))?;

    let (train_ids, test_ids) = stage("split", split_nodes(g.node_count(), cfg.train_fraction, cfg.stage_seed(stream::SPLIT)))?;
    write_split_csv(&train_ids, &test_ids, dir.join("split.csv"))?;
    let labeled: Vec<LabeledNode> = train_ids.iter().map(|&v| (v, truth.label[v])).collect();
    let test_truth = pick(&truth.label, &test_ids);

    let clock = Instant::now();
    let step1_cfg = cfg.train.to_train_config(cfg.stage_seed(stream::STEP1));
    let step1 = stage("train_step1", train_classifier(g, &compute_features(g), &labeled, &step1_cfg))?;
    timings.step1_seconds = clock.elapsed().as_secs_f64();
    if step1.single_class {
        warnings.push("all training labels share one class".to_string());
    }
    write_loss_csv(&step1.loss_history, dir.join("train_step1.csv"))?;
    save_checkpoint(&step1.params, dir.join("model_step1.json"))?;

    let clock = Instant::now();
    let est = stage("graph_learning", estimate_graph(g, &step1.params, &cfg.graph_learning))?;
    timings.graph_learning_seconds = clock.elapsed().as_secs_f64();
    write_trace_csv(&est.adjacency.trace, create(dir, "graph_learning_trace.csv")?)?;
    save_edge_list(&est.graph, dir.join("graph_estimated.edges"))?;
    if est.summary.isolated_nodes > 0 {
        warnings.push(format!("{} isolated nodes in the estimated graph", est.summary.isolated_nodes));
    }

    let clock = Instant::now();
    let step4_cfg = cfg.train.to_train_config(cfg.stage_seed(stream::STEP4));
    let step4 = stage(
        "train_step4",
        train_classifier(&est.graph, &compute_features(&est.graph), &labeled, &step4_cfg),
    )?;
    timings.step4_seconds = clock.elapsed().as_secs_f64();
    write_loss_csv(&step4.loss_history, dir.join("train_step4.csv"))?;
    save_checkpoint(&step4.params, dir.join("model_step4.json"))?;

    let clock = Instant::now();
    let x_est = compute_features(&est.graph);
    let mc_seed = cfg.stage_seed(stream::MC);
    let prediction = stage(
        "predict",
        mc_dropout_predict(&est.graph, &x_est, &step4.params, cfg.mc.samples, cfg.mc.dropout_rate, mc_seed),
    )?;
    let (_, point) = stage("predict", point_predict(&est.graph, &x_est, &step4.params))?;
    timings.inference_seconds = clock.elapsed().as_secs_f64();
    write_prediction_csv(&prediction, Some(&test_ids), create(dir, "predictions.csv")?)?;

    let ensemble = stage("evaluate", evaluate(&pick(&prediction.predicted, &test_ids), &test_truth))?;
    let point_metrics = stage("evaluate", evaluate(&pick(&point, &test_ids), &test_truth))?;
    let mean_ci_halfwidth = test_ids.iter().map(|&v| prediction.ci_halfwidth[v]).sum::<f64>() / test_ids.len() as f64;

    let clock = Instant::now();
    let mut noise = Vec::new();
    for (k, &fraction) in cfg.noise_fractions.iter().enumerate() {
        let noisy = stage("noise", add_noise_links(g, fraction, cfg.stage_seed(stream::NOISE + k as u64)))?;
        let tag = format!("{fraction}");
        save_edge_list(&noisy.graph, dir.join(format!("graph_noise_{tag}.edges")))?;
        let (n_est, n_pred, n_point) = bilgr_inference(
            &noisy.graph,
            &step1.params,
            &step4.params,
            &cfg.graph_learning,
            &cfg.mc,
            mc_seed,
        )?;
        write_prediction_csv(&n_pred, Some(&test_ids), create(dir, &format!("predictions_noise_{tag}.csv"))?)?;
        let metrics = stage("evaluate", evaluate(&pick(&n_pred.predicted, &test_ids), &test_truth))?;
        let n_point_metrics = stage("evaluate", evaluate(&pick(&n_point, &test_ids), &test_truth))?;
        noise.push(NoiseReport {
            fraction,
            links_added: noisy.added,
            observed_edges: noisy.graph.edge_count(),
            estimate: n_est.summary,
            accuracy_drop: ensemble.accuracy - metrics.accuracy,
            ensemble: metrics,
            point: n_point_metrics,
        });
    }
    timings.noise_seconds = clock.elapsed().as_secs_f64();

    for w in &warnings {
        log::warn!("{w}");
    }
    let mut test_counts = [0; 3];
    for c in &test_truth {
        test_counts[c.index()] += 1;
    }
    let report = EvalReport {
        seed: cfg.seed,
        nodes: g.node_count(),
        edges: g.edge_count(),
        train_nodes: train_ids.len(),
        test_nodes: test_ids.len(),
        ground_truth_counts: truth.class_counts(),
        test_counts,
        degenerate_scores: truth.degenerate,
        warnings,
        step1: TrainSummary::from_outcome(&step1),
        graph_estimate: est.summary,
        step4: TrainSummary::from_outcome(&step4),
        mc_samples: cfg.mc.samples,
        ensemble,
        point: point_metrics,
        mean_ci_halfwidth,
        noise,
    };
    write_json(&report, dir.join("report.json"))?;
    write_json(&timings, dir.join("timings.json"))?;
    Ok(RunOutcome {
        report,
        timings,
        truth,
        step1: step1.params,
        step4: step4.params,
        train_nodes: train_ids,
        test_nodes: test_ids,
        prediction,
    })
}
