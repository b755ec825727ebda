use ndarray::ArrayView2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{loss_and_gradient, Architecture, Masks, ModelParams, NeighborMean};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeFeatures};
use crate::nn::{adam_step, AdamConfig, AdamState};
use crate::robustness::Class;
use crate::scalar::Real;

/// A node id with its revealed class.
pub type LabeledNode = (usize, Class);

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<T = f64> {
    pub architecture: Architecture,
    pub adam: AdamConfig<T>,
    pub epochs: usize,
    /// Loss weights for classes 1, 2, 3.
    pub class_weights: [T; 3],
    pub dropout_rate: f64,
    /// Stop after this many epochs without a relative loss improvement of
    /// `min_improvement`.
    pub patience: usize,
    pub min_improvement: f64,
    pub seed: u64,
}

impl<T: Real> Default for TrainConfig<T> {
    fn default() -> Self {
        Self {
            architecture: Architecture::default(),
            adam: AdamConfig::default(),
            epochs: 300,
            class_weights: [T::lit(100.0), T::lit(50.0), T::one()],
            dropout_rate: 0.5,
            patience: 50,
            min_improvement: 1e-4,
            seed: 0,
        }
    }
}

impl<T: Real> TrainConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Parameter(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        if self.class_weights.iter().any(|&w| !(w > T::zero())) {
            return Err(Error::Parameter("class weights must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Parameter("epochs must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T = f64> {
    pub params: ModelParams<T>,
    /// Training loss per epoch, as seen by the optimizer.
    pub loss_history: Vec<T>,
    /// Every labeled node carried the same class.
    pub single_class: bool,
}

/// Full-batch training: every epoch runs the whole graph forward (with
/// fresh dropout masks) and takes the loss on the labeled nodes only.
pub fn train_classifier<T: Real>(
    g: &Graph<T>,
    x: &NodeFeatures<T>,
    labeled: &[LabeledNode],
    cfg: &TrainConfig<T>,
) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    if labeled.is_empty() {
        return Err(Error::Parameter("labeled set is empty".into()));
    }
    let single_class = labeled.iter().all(|&(_, c)| c == labeled[0].1);
    if single_class {
        log::warn!("all {} labeled nodes belong to class {}", labeled.len(), labeled[0].1);
    }
    let agg = NeighborMean::new(g);
    train_with_aggregator(&agg, x.view(), labeled, cfg).map(|(params, loss_history)| TrainOutcome {
        params,
        loss_history,
        single_class,
    })
}

fn train_with_aggregator<T: Real>(
    agg: &NeighborMean<T>,
    x: ArrayView2<'_, T>,
    labeled: &[LabeledNode],
    cfg: &TrainConfig<T>,
) -> Result<(ModelParams<T>, Vec<T>)> {
    let mut params = ModelParams::init(&cfg.architecture, cfg.seed)?;
    let mut flat = params.to_flat();
    let mut state = AdamState::new(flat.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let n = x.nrows();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best = T::infinity();
    let mut stale = 0;
    let threshold = T::one() - T::lit(cfg.min_improvement);
    for epoch in 0..cfg.epochs {
        let masks = if cfg.dropout_rate > 0.0 {
            Some(Masks::sample(n, &cfg.architecture, cfg.dropout_rate, &mut rng)?)
        } else {
            None
        };
        let (loss, grad) = loss_and_gradient(agg, x, &params, labeled, &cfg.class_weights, masks.as_ref())?;
        adam_step(&mut flat, &grad, &mut state, &cfg.adam)
            .map_err(|e| Error::Numeric(format!("epoch {epoch}: {e}")))?;
        params.set_flat(&flat)?;
        history.push(loss);
        if loss < best * threshold {
            best = loss;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                log::debug!("loss plateaued at epoch {epoch}");
                break;
            }
        }
    }
    Ok((params, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::compute_features;
    use crate::graph::fixtures::complete;
    use crate::robustness::criticality_scores;
    use crate::sage::point_predict;

    /// A hub joined to five sub-hubs with four leaves each.
    fn star_of_stars() -> Graph<f64> {
        let mut g = Graph::new(26);
        let mut next = 6;
        for hub in 1..6 {
            g.add_edge(0, hub, 1.0).unwrap();
            for _ in 0..4 {
                g.add_edge(hub, next, 1.0).unwrap();
                next += 1;
            }
        }
        // Pad to 30 nodes with a short tail on the last leaf.
        let mut g2 = Graph::new(30);
        for (u, v, w) in g.edges() {
            g2.add_edge(u, v, w).unwrap();
        }
        for k in 26..30 {
            g2.add_edge(k - 1, k, 1.0).unwrap();
        }
        g2
    }

    #[test]
    fn loss_decreases_on_star_of_stars() {
        let g = star_of_stars();
        let truth = criticality_scores(&g).unwrap();
        let labeled: Vec<LabeledNode> = truth.label.iter().copied().enumerate().collect();
        let cfg = TrainConfig {
            epochs: 10,
            dropout_rate: 0.0,
            seed: 3,
            ..TrainConfig::default()
        };
        let out = train_classifier(&g, &compute_features(&g), &labeled, &cfg).unwrap();
        assert_eq!(out.loss_history.len(), 10);
        for w in out.loss_history.windows(2) {
            assert!(w[1] < w[0], "{:?}", out.loss_history);
        }
    }

    #[test]
    fn constant_target_is_learned() {
        let g = complete(4);
        let truth = criticality_scores(&g).unwrap();
        let labeled: Vec<LabeledNode> = truth.label.iter().copied().enumerate().collect();
        let cfg = TrainConfig {
            epochs: 200,
            seed: 1,
            ..TrainConfig::default()
        };
        let x = compute_features(&g);
        let out = train_classifier(&g, &x, &labeled, &cfg).unwrap();
        assert!(out.single_class);
        let (_, classes) = point_predict(&g, &x, &out.params).unwrap();
        assert!(classes.iter().all(|&c| c == Class::Two));
    }

    #[test]
    fn rejects_bad_configuration() {
        let g = complete(4);
        let x = compute_features(&g);
        assert!(train_classifier(&g, &x, &[], &TrainConfig::default()).is_err());
        let cfg = TrainConfig {
            dropout_rate: 1.0,
            ..TrainConfig::<f64>::default()
        };
        assert!(train_classifier(&g, &x, &[(0, Class::One)], &cfg).is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let g = star_of_stars();
        let x = compute_features(&g);
        let labeled: Vec<LabeledNode> = (0..30).map(|v| (v, if v == 0 { Class::One } else { Class::Three })).collect();
        let cfg = TrainConfig {
            epochs: 20,
            seed: 9,
            ..TrainConfig::default()
        };
        let a = train_classifier(&g, &x, &labeled, &cfg).unwrap();
        let b = train_classifier(&g, &x, &labeled, &cfg).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.loss_history, b.loss_history);
    }
}
