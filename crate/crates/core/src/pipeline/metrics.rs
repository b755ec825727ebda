use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::robustness::Class;

/// Classification metrics over the three criticality classes.
///
/// `confusion[t][p]` counts nodes of true class `t + 1` predicted as
/// `p + 1`. Precision and recall with an empty denominator are reported as
/// zero and flagged in `precision_undefined` / `recall_undefined`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub total: usize,
    pub accuracy: f64,
    pub precision: [f64; 3],
    pub recall: [f64; 3],
    pub precision_undefined: [bool; 3],
    pub recall_undefined: [bool; 3],
    pub class1_recall: f64,
    pub support: [usize; 3],
    pub confusion: [[usize; 3]; 3],
}

pub fn evaluate(predicted: &[Class], truth: &[Class]) -> Result<Metrics> {
    if predicted.len() != truth.len() {
        return Err(Error::Contract(format!(
            "{} predictions for {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    let mut confusion = [[0usize; 3]; 3];
    for (&p, &t) in predicted.iter().zip(truth) {
        confusion[t.index()][p.index()] += 1;
    }
    let total = truth.len();
    let correct: usize = (0..3).map(|c| confusion[c][c]).sum();
    let support: [usize; 3] = std::array::from_fn(|t| confusion[t].iter().sum());
    let predicted_count: [usize; 3] = std::array::from_fn(|p| (0..3).map(|t| confusion[t][p]).sum());
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let recall = std::array::from_fn(|c| ratio(confusion[c][c], support[c]));
    Ok(Metrics {
        total,
        accuracy: ratio(correct, total),
        precision: std::array::from_fn(|c| ratio(confusion[c][c], predicted_count[c])),
        recall,
        precision_undefined: std::array::from_fn(|c| predicted_count[c] == 0),
        recall_undefined: std::array::from_fn(|c| support[c] == 0),
        class1_recall: recall[0],
        support,
        confusion,
    })
}

/// Same as [`evaluate`] for raw numeric labels, rejecting anything outside
/// `{1, 2, 3}`.
pub fn evaluate_numbers(predicted: &[u8], truth: &[u8]) -> Result<Metrics> {
    let parse = |xs: &[u8]| xs.iter().map(|&x| Class::from_number(x)).collect::<Result<Vec<_>>>();
    evaluate(&parse(predicted)?, &parse(truth)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn classes(xs: &[u8]) -> Vec<Class> {
        xs.iter().map(|&x| Class::from_number(x).unwrap()).collect()
    }

    #[test]
    fn perfect_prediction() {
        let t = classes(&[1, 2, 3, 3, 2, 1]);
        let m = evaluate(&t, &t).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.recall, [1.0; 3]);
        assert_eq!(m.precision, [1.0; 3]);
    }

    #[test]
    fn forty_one_of_forty_three() {
        let mut truth = vec![1u8; 43];
        truth.extend(vec![3u8; 100]);
        let mut pred = truth.clone();
        pred[0] = 2;
        pred[1] = 3;
        let m = evaluate_numbers(&pred, &truth).unwrap();
        assert!((m.class1_recall - 41.0 / 43.0).abs() < 1e-15);
        assert!((m.class1_recall - 0.953).abs() < 1e-3);
    }

    #[test]
    fn confusion_consistency() {
        let truth = classes(&[1, 1, 2, 2, 2, 3, 3, 3, 3]);
        let pred = classes(&[1, 2, 2, 3, 2, 3, 1, 3, 3]);
        let m = evaluate(&pred, &truth).unwrap();
        for c in 0..3 {
            assert_eq!(m.confusion[c].iter().sum::<usize>(), m.support[c]);
            assert_eq!(m.recall[c], m.confusion[c][c] as f64 / m.support[c] as f64);
        }
        let trace: usize = (0..3).map(|c| m.confusion[c][c]).sum();
        assert_eq!(m.accuracy, trace as f64 / m.total as f64);
    }

    #[test]
    fn empty_denominators_are_flagged() {
        let m = evaluate(&classes(&[3, 3]), &classes(&[3, 2])).unwrap();
        assert!(m.precision_undefined[0] && m.precision_undefined[1]);
        assert!(m.recall_undefined[0] && !m.recall_undefined[1]);
        assert_eq!(m.precision[0], 0.0);
    }

    #[test]
    fn bad_labels_are_domain_errors() {
        assert!(matches!(evaluate_numbers(&[4], &[1]), Err(Error::Domain(_))));
        assert!(matches!(evaluate_numbers(&[1], &[0]), Err(Error::Domain(_))));
        assert!(evaluate(&classes(&[1]), &classes(&[1, 2])).is_err());
    }

    #[test]
    fn random_guessing_is_one_third() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let n = 100_000;
        let truth: Vec<u8> = (0..n).map(|i| (i % 3) as u8 + 1).collect();
        let pred: Vec<u8> = (0..n).map(|_| rng.gen_range(1..=3)).collect();
        let m = evaluate_numbers(&pred, &truth).unwrap();
        assert!((m.accuracy - 1.0 / 3.0).abs() < 0.01);
    }
}
