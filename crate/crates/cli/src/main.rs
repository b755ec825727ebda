use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bilgr::graph::{compute_features, load_edge_list, save_edge_list, Graph};
use bilgr::graph_learning::write_trace_csv;
use bilgr::pipeline::{
    estimate_graph, evaluate, observed_graph, run_bilgr_on, split_nodes, time_inference, time_oracle, write_json,
    write_loss_csv, write_split_csv, Benchmark, ExperimentConfig,
};
use bilgr::robustness::{criticality_scores, read_criticality_csv, write_criticality_csv, Class};
use bilgr::sage::{
    load_checkpoint, mc_dropout_predict, read_prediction_csv, save_checkpoint, train_classifier, write_prediction_csv,
    LabeledNode, ModelParams,
};
use bilgr::{Error, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "bilgr", version, about = "Node criticality classification with graph learning and MC dropout")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML experiment configuration; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Size of the worker pool.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Fail with exit code 4 on degenerate input instead of warning.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the observed graph (graph.edges).
    Generate,
    /// Run the exhaustive oracle (criticality.csv).
    OracleScore {
        /// Edge list; generated from the configuration when absent.
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// Train a classifier on the train split (model.json, train_loss.csv, split.csv).
    Train {
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Criticality CSV; only train-split rows are used.
        #[arg(long)]
        labels: PathBuf,
    },
    /// Estimate a graph from a model's embeddings (graph_estimated.edges, graph_learning_trace.csv).
    LearnGraph {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        model: PathBuf,
    },
    /// MC-dropout prediction (predictions.csv).
    Predict {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        /// Write only the test split.
        #[arg(long)]
        test_only: bool,
    },
    /// Score a prediction CSV against a criticality CSV (metrics.json).
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        labels: PathBuf,
    },
    /// Time the oracle against model inference (benchmark.json).
    Benchmark {
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Trained model; one is trained on the train split when absent.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// The whole pipeline with every artifact and report.json.
    RunAll,
}

fn load_config(global: &GlobalArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &global.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &global.out_dir {
        cfg.out_dir = dir.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn graph_for(cfg: &ExperimentConfig, path: &Option<PathBuf>) -> Result<Graph<f64>> {
    match path {
        Some(p) => load_edge_list(p),
        None => observed_graph(cfg),
    }
}

fn read_labels(path: &Path) -> Result<Vec<Class>> {
    let rows = read_criticality_csv(BufReader::new(File::open(path)?))?;
    Ok(rows.into_iter().map(|r| r.label).collect())
}

fn labeled_train_nodes(cfg: &ExperimentConfig, labels: &[Class]) -> Result<(Vec<usize>, Vec<usize>, Vec<LabeledNode>)> {
    let (train, test) = split_nodes(labels.len(), cfg.train_fraction, cfg.stage_seed(1))?;
    let labeled = train.iter().map(|&v| (v, labels[v])).collect();
    Ok((train, test, labeled))
}

fn degenerate(strict: bool, what: &str) -> Result<()> {
    if strict {
        Err(Error::Degenerate(what.to_string()))
    } else {
        log::warn!("{what}");
        Ok(())
    }
}

fn train_model(cfg: &ExperimentConfig, g: &Graph<f64>, labeled: &[LabeledNode]) -> Result<(ModelParams<f64>, Vec<f64>)> {
    let out = train_classifier(g, &compute_features(g), labeled, &cfg.train.to_train_config(cfg.stage_seed(2)))?;
    Ok((out.params, out.loss_history))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let cfg = load_config(&cli.global)?;
    let dir = cfg.out_dir.clone();
    std::fs::create_dir_all(&dir)?;
    let strict = cli.global.strict;
    match cli.command {
        Command::Generate => {
            let g = observed_graph(&cfg)?;
            save_edge_list(&g, dir.join("graph.edges"))?;
            log::info!("{} nodes, {} edges", g.node_count(), g.edge_count());
        }
        Command::OracleScore { graph } => {
            let g = graph_for(&cfg, &graph)?;
            let r = criticality_scores(&g)?;
            write_criticality_csv(&r, BufWriter::new(File::create(dir.join("criticality.csv"))?))?;
            log::info!("class counts {:?}", r.class_counts());
            if r.degenerate {
                degenerate(strict, "criticality scores are degenerate")?;
            }
        }
        Command::Train { graph, labels } => {
            let g = graph_for(&cfg, &graph)?;
            let labels = read_labels(&labels)?;
            if labels.len() != g.node_count() {
                return Err(Error::Contract("label count does not match the graph".into()));
            }
            let (train, test, labeled) = labeled_train_nodes(&cfg, &labels)?;
            let (params, history) = train_model(&cfg, &g, &labeled)?;
            save_checkpoint(&params, dir.join("model.json"))?;
            write_loss_csv(&history, dir.join("train_loss.csv"))?;
            write_split_csv(&train, &test, dir.join("split.csv"))?;
        }
        Command::LearnGraph { graph, model } => {
            let g = graph_for(&cfg, &graph)?;
            let params = load_checkpoint(&model)?;
            let est = estimate_graph(&g, &params, &cfg.graph_learning)?;
            save_edge_list(&est.graph, dir.join("graph_estimated.edges"))?;
            write_trace_csv(&est.adjacency.trace, BufWriter::new(File::create(dir.join("graph_learning_trace.csv"))?))?;
            log::info!("{} edges, {} isolated", est.summary.edges, est.summary.isolated_nodes);
        }
        Command::Predict { graph, model, test_only } => {
            let g = graph_for(&cfg, &graph)?;
            let params = load_checkpoint(&model)?;
            let pred = mc_dropout_predict(&g, &compute_features(&g), &params, cfg.mc.samples, cfg.mc.dropout_rate, cfg.stage_seed(4))?;
            let out = BufWriter::new(File::create(dir.join("predictions.csv"))?);
            if test_only {
                let (_, test) = split_nodes(g.node_count(), cfg.train_fraction, cfg.stage_seed(1))?;
                write_prediction_csv(&pred, Some(&test), out)?;
            } else {
                write_prediction_csv(&pred, None, out)?;
            }
        }
        Command::Evaluate { predictions, labels } => {
            let rows = read_prediction_csv(BufReader::new(File::open(&predictions)?))?;
            let labels = read_labels(&labels)?;
            let mut predicted = Vec::with_capacity(rows.len());
            let mut truth = Vec::with_capacity(rows.len());
            for r in &rows {
                let t = labels.get(r.node_id).ok_or(Error::Index {
                    index: r.node_id,
                    nodes: labels.len(),
                })?;
                predicted.push(r.pred_class);
                truth.push(*t);
            }
            let m = evaluate(&predicted, &truth)?;
            write_json(&m, dir.join("metrics.json"))?;
            println!(
                "accuracy {:.4}  class-1 recall {:.4}  recall {:?}  precision {:?}",
                m.accuracy, m.class1_recall, m.recall, m.precision
            );
        }
        Command::Benchmark { graph, model } => {
            let g = graph_for(&cfg, &graph)?;
            let (oracle, truth) = time_oracle(&g)?;
            if truth.degenerate {
                degenerate(strict, "criticality scores are degenerate")?;
            }
            let params = match model {
                Some(path) => load_checkpoint(&path)?,
                None => train_model(&cfg, &g, &labeled_train_nodes(&cfg, &truth.label)?.2)?.0,
            };
            let inference = time_inference(&g, &params, &cfg.mc, cfg.stage_seed(4))?;
            let b = Benchmark::from_times(&g, &cfg.mc, oracle, inference);
            write_json(&b, dir.join("benchmark.json"))?;
            println!(
                "oracle {:.3} s, inference {:.3} s, ratio {:.1} ({} threads)",
                b.oracle_seconds, b.inference_seconds, b.ratio, b.threads
            );
        }
        Command::RunAll => {
            let g = observed_graph(&cfg)?;
            let out = run_bilgr_on(&cfg, &g, None)?;
            let r = &out.report;
            println!(
                "ensemble accuracy {:.4} (point {:.4}), class-1 recall {:.4}, mean half-width {:.4}",
                r.ensemble.accuracy, r.point.accuracy, r.ensemble.class1_recall, r.mean_ci_halfwidth
            );
            if r.degenerate_scores {
                degenerate(strict, "criticality scores are degenerate")?;
            }
        }
    }
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::Config(_) | Error::Parameter(_) => 2,
        Error::Numeric(_) => 3,
        Error::Degenerate(_) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
