use std::io::{Read, Write};

use ndarray::{Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{forward, Masks, ModelParams, NeighborMean};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeFeatures};
use crate::robustness::Class;
use crate::scalar::Real;

/// Output of the last aggregation layer with dropout off.
pub fn extract_embeddings<T: Real>(g: &Graph<T>, x: &NodeFeatures<T>, params: &ModelParams<T>) -> Result<Array2<T>> {
    Ok(forward(&NeighborMean::new(g), x.view(), params, None)?.embeddings)
}

fn argmax<T: Real>(row: ndarray::ArrayView1<'_, T>) -> usize {
    let mut best = 0;
    for (i, &p) in row.iter().enumerate() {
        if p > row[best] {
            best = i;
        }
    }
    best
}

/// Deterministic class probabilities and argmax classes.
pub fn point_predict<T: Real>(
    g: &Graph<T>,
    x: &NodeFeatures<T>,
    params: &ModelParams<T>,
) -> Result<(Array2<T>, Vec<Class>)> {
    let pass = forward(&NeighborMean::new(g), x.view(), params, None)?;
    let classes = pass
        .probs
        .axis_iter(Axis(0))
        .map(|row| Class::from_index(argmax(row)))
        .collect::<Result<Vec<_>>>()?;
    Ok((pass.probs, classes))
}

/// Monte-Carlo dropout summary per node.
#[derive(Debug, Clone, PartialEq)]
pub struct McPrediction<T = f64> {
    /// Mean class probabilities over the passes, `N x 3`.
    pub mean: Array2<T>,
    /// Per-class standard deviation over the passes.
    pub std: Array2<T>,
    pub predicted: Vec<Class>,
    /// `1.96` times the standard deviation of the predicted class.
    pub ci_halfwidth: Vec<T>,
    pub samples: usize,
}

impl<T: Real> McPrediction<T> {
    pub fn predicted_std(&self, v: usize) -> T {
        self.std[[v, self.predicted[v].index()]]
    }

    pub fn row(&self, v: usize) -> PredictionRow {
        PredictionRow {
            node_id: v,
            p1_mean: self.mean[[v, 0]].as_f64(),
            p2_mean: self.mean[[v, 1]].as_f64(),
            p3_mean: self.mean[[v, 2]].as_f64(),
            p_pred_std: self.predicted_std(v).as_f64(),
            pred_class: self.predicted[v],
            ci_halfwidth: self.ci_halfwidth[v].as_f64(),
        }
    }
}

/// Runs `samples` forward passes, pass `s` drawing its masks from
/// `seed + s`, and summarizes them. The passes run on the current rayon
/// pool; the summary does not depend on scheduling.
pub fn mc_dropout_predict<T: Real>(
    g: &Graph<T>,
    x: &NodeFeatures<T>,
    params: &ModelParams<T>,
    samples: usize,
    rate: f64,
    seed: u64,
) -> Result<McPrediction<T>> {
    if samples == 0 {
        return Err(Error::Parameter("MC dropout needs at least one sample".into()));
    }
    if samples == 1 {
        log::warn!("single MC dropout sample: standard deviations are zero by convention");
    }
    let agg = NeighborMean::new(g);
    let arch = params.architecture();
    let n = g.node_count();
    let passes = (0..samples as u64)
        .into_par_iter()
        .map(|s| {
            let masks = if rate > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(s));
                Some(Masks::sample(n, &arch, rate, &mut rng)?)
            } else {
                None
            };
            Ok(forward(&agg, x.view(), params, masks.as_ref())?.probs)
        })
        .collect::<Result<Vec<Array2<T>>>>()?;

    let count = T::from_usize_lossy(samples);
    let mut mean = Array2::<T>::zeros(passes[0].raw_dim());
    for p in &passes {
        mean += p;
    }
    mean.mapv_inplace(|x| x / count);
    let mut var = Array2::<T>::zeros(mean.raw_dim());
    for p in &passes {
        var.zip_mut_with(&(p - &mean), |acc, &d| *acc += d * d);
    }
    let std = var.mapv(|v| (v / count).sqrt());
    let predicted = mean
        .axis_iter(Axis(0))
        .map(|row| Class::from_index(argmax(row)))
        .collect::<Result<Vec<_>>>()?;
    let z = T::lit(1.96);
    let ci_halfwidth = predicted
        .iter()
        .enumerate()
        .map(|(v, c)| z * std[[v, c.index()]])
        .collect();
    Ok(McPrediction {
        mean,
        std,
        predicted,
        ci_halfwidth,
        samples,
    })
}

/// One line of the prediction CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub node_id: usize,
    pub p1_mean: f64,
    pub p2_mean: f64,
    pub p3_mean: f64,
    pub p_pred_std: f64,
    pub pred_class: Class,
    pub ci_halfwidth: f64,
}

/// Writes the rows for `nodes` (all nodes when `None`).
pub fn write_prediction_csv<T: Real, W: Write>(pred: &McPrediction<T>, nodes: Option<&[usize]>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match nodes {
        Some(ids) => {
            for &v in ids {
                w.serialize(pred.row(v))?;
            }
        }
        None => {
            for v in 0..pred.predicted.len() {
                w.serialize(pred.row(v))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct RawPrediction {
    node_id: usize,
    p1_mean: f64,
    p2_mean: f64,
    p3_mean: f64,
    p_pred_std: f64,
    pred_class: u8,
    ci_halfwidth: f64,
}

/// Reads a prediction CSV back, in file order.
pub fn read_prediction_csv<R: Read>(input: R) -> Result<Vec<PredictionRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|record| {
            let raw: RawPrediction = record?;
            Ok(PredictionRow {
                node_id: raw.node_id,
                p1_mean: raw.p1_mean,
                p2_mean: raw.p2_mean,
                p3_mean: raw.p3_mean,
                p_pred_std: raw.p_pred_std,
                pred_class: Class::from_number(raw.pred_class)?,
                ci_halfwidth: raw.ci_halfwidth,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::complete;
    use crate::graph::{compute_features, generate_power_law_cluster};
    use crate::sage::{sage_forward, Architecture};

    fn setup() -> (Graph<f64>, NodeFeatures<f64>, ModelParams<f64>) {
        let g = generate_power_law_cluster::<f64>(25, 2, 0.2, 6).unwrap();
        let x = compute_features(&g);
        let params = ModelParams::init(&Architecture::default(), 2).unwrap();
        (g, x, params)
    }

    #[test]
    fn zero_rate_matches_deterministic_forward() {
        let (g, x, params) = setup();
        let pred = mc_dropout_predict(&g, &x, &params, 5, 0.0, 1).unwrap();
        let (probs, classes) = point_predict(&g, &x, &params).unwrap();
        assert!(pred.std.iter().all(|&s| s == 0.0));
        assert_eq!(pred.predicted, classes);
        for (a, b) in pred.mean.iter().zip(probs.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn single_sample_has_zero_spread() {
        let (g, x, params) = setup();
        let pred = mc_dropout_predict(&g, &x, &params, 1, 0.5, 1).unwrap();
        assert!(pred.std.iter().all(|&s| s == 0.0));
        assert!(mc_dropout_predict(&g, &x, &params, 0, 0.5, 1).is_err());
    }

    #[test]
    fn mean_on_simplex_and_spread_positive() {
        let (g, x, params) = setup();
        let pred = mc_dropout_predict(&g, &x, &params, 50, 0.5, 3).unwrap();
        for row in pred.mean.axis_iter(Axis(0)) {
            assert!((row.sum() - 1.0).abs() < 1e-9);
        }
        assert!((0..25).all(|v| pred.predicted_std(v) > 0.0));
        assert_eq!(pred, mc_dropout_predict(&g, &x, &params, 50, 0.5, 3).unwrap());
    }

    #[test]
    fn embeddings_are_deterministic_and_consistent() {
        let (g, x, params) = setup();
        let a = extract_embeddings(&g, &x, &params).unwrap();
        let b = extract_embeddings(&g, &x, &params).unwrap();
        assert_eq!(a, b);
        let (_, from_forward) = sage_forward(&g, &x, &params, None).unwrap();
        assert_eq!(a, from_forward);
    }

    #[test]
    fn automorphic_nodes_share_embeddings() {
        let g = complete(5);
        let x = compute_features(&g);
        let params = ModelParams::init(&Architecture::default(), 8).unwrap();
        let emb = extract_embeddings(&g, &x, &params).unwrap();
        assert_eq!(emb.row(1), emb.row(4));
    }

    #[test]
    fn prediction_csv_header() {
        let (g, x, params) = setup();
        let pred = mc_dropout_predict(&g, &x, &params, 3, 0.5, 0).unwrap();
        let mut buf = Vec::new();
        write_prediction_csv(&pred, Some(&[2, 7]), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next(),
            Some("node_id,p1_mean,p2_mean,p3_mean,p_pred_std,pred_class,ci_halfwidth")
        );
        assert_eq!(text.lines().count(), 3);
        let rows = read_prediction_csv(text.as_bytes()).unwrap();
        assert_eq!(rows, vec![pred.row(2), pred.row(7)]);
    }
}
