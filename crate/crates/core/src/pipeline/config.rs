use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_learning::GraphLearnConfig;
use crate::nn::AdamConfig;
use crate::sage::{Architecture, TrainConfig};

/// Holme-Kim generator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub nodes: usize,
    pub edges_per_node: usize,
    pub triangle_probability: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            nodes: 1000,
            edges_per_node: 1,
            triangle_probability: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub epochs: usize,
    pub learning_rate: f64,
    pub class_weights: [f64; 3],
    pub dropout_rate: f64,
    pub patience: usize,
    pub min_improvement: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            epochs: 300,
            learning_rate: 0.01,
            class_weights: [100.0, 50.0, 1.0],
            dropout_rate: 0.5,
            patience: 50,
            min_improvement: 1e-4,
        }
    }
}

impl TrainSettings {
    pub fn to_train_config(&self, seed: u64) -> TrainConfig<f64> {
        TrainConfig {
            architecture: Architecture::default(),
            adam: AdamConfig {
                learning_rate: self.learning_rate,
                ..AdamConfig::default()
            },
            epochs: self.epochs,
            class_weights: self.class_weights,
            dropout_rate: self.dropout_rate,
            patience: self.patience,
            min_improvement: self.min_improvement,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSettings {
    pub samples: usize,
    pub dropout_rate: f64,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            samples: 100,
            dropout_rate: 0.5,
        }
    }
}

/// Graph estimation settings: solver parameters plus distance scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphStageSettings {
    /// Divide distances by their off-diagonal mean before solving.
    pub normalize_distances: bool,
    pub solver: GraphLearnConfig,
}

impl Default for GraphStageSettings {
    fn default() -> Self {
        Self {
            normalize_distances: false,
            solver: GraphLearnConfig {
                kkt_tolerance: 1e-6,
                ..GraphLearnConfig::default()
            },
        }
    }
}

/// Everything a full run needs. Loaded from TOML; every key is optional.
///
/// ```toml
/// seed = 7
/// train_fraction = 0.6
/// noise_fractions = [0.02, 0.04]
/// out_dir = "runs/seed7"
///
/// [generator]
/// nodes = 1000
/// edges_per_node = 1
/// triangle_probability = 0.1
///
/// [train]
/// epochs = 300
/// learning_rate = 0.01
///
/// [graph_learning.solver]
/// alpha = 1.0
/// beta = 0.5
///
/// [mc]
/// samples = 100
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every stage derives its own seed from it.
    pub seed: u64,
    /// Edge list to use instead of generating a graph.
    pub graph: Option<PathBuf>,
    pub generator: GeneratorConfig,
    pub train_fraction: f64,
    pub noise_fractions: Vec<f64>,
    pub train: TrainSettings,
    pub graph_learning: GraphStageSettings,
    pub mc: McSettings,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            graph: None,
            generator: GeneratorConfig::default(),
            train_fraction: 0.6,
            noise_fractions: vec![0.02, 0.04],
            train: TrainSettings::default(),
            graph_learning: GraphStageSettings::default(),
            mc: McSettings::default(),
            out_dir: PathBuf::from("bilgr-out"),
        }
    }
}

/// Offsets added to the master seed for each stage.
pub(crate) mod stream {
    pub const SPLIT: u64 = 1;
    pub const STEP1: u64 = 2;
    pub const STEP4: u64 = 3;
    pub const MC: u64 = 4;
    pub const NOISE: u64 = 100;
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn stage_seed(&self, offset: u64) -> u64 {
        self.seed.wrapping_add(offset)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction {} outside (0, 1)", self.train_fraction));
        }
        if self.graph.is_none() && self.generator.nodes < 2 {
            return bad("generator needs at least two nodes".into());
        }
        if let Some(f) = self.noise_fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return bad(format!("noise fraction {f} outside (0, 1]"));
        }
        if self.mc.samples == 0 {
            return bad("mc.samples must be positive".into());
        }
        if !(0.0..1.0).contains(&self.mc.dropout_rate) {
            return bad(format!("mc.dropout_rate {} outside [0, 1)", self.mc.dropout_rate));
        }
        self.train
            .to_train_config(0)
            .validate()
            .and_then(|_| self.graph_learning.solver.validate())
            .map_err(|e| Error::Config(e.to_string()))
    }
}
