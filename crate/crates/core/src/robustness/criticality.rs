use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::resistance::effective_graph_resistance;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scalar::Real;

/// Criticality class. `One` is the most critical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Class {
    One,
    Two,
    Three,
}

impl Class {
    pub const ALL: [Class; 3] = [Class::One, Class::Two, Class::Three];

    /// Zero-based position used for one-hot encoding and matrix rows.
    pub fn index(self) -> usize {
        match self {
            Class::One => 0,
            Class::Two => 1,
            Class::Three => 2,
        }
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::Domain(format!("class index {i} outside 0..3")))
    }

    /// The label as written in files: 1, 2 or 3.
    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn from_number(label: u8) -> Result<Self> {
        match label {
            1 => Ok(Class::One),
            2 => Ok(Class::Two),
            3 => Ok(Class::Three),
            other => Err(Error::Domain(format!("class label {other} outside {{1, 2, 3}}"))),
        }
    }
}

impl TryFrom<u8> for Class {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        Self::from_number(v)
    }
}

impl From<Class> for u8 {
    fn from(c: Class) -> u8 {
        c.number()
    }
}

impl std::fmt::Display for Class {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Bins `[0, 0.3)`, `[0.3, 0.7)`, `[0.7, 1]` to classes 1, 2, 3.
pub fn label_nodes<T: Real>(scores: &[T]) -> Result<Vec<Class>> {
    let (low, high) = (T::lit(0.3), T::lit(0.7));
    scores
        .iter()
        .enumerate()
        .map(|(v, &s)| {
            if !(s >= T::zero() && s <= T::one()) {
                Err(Error::Domain(format!("score {s} of node {v} outside [0, 1]")))
            } else if s < low {
                Ok(Class::One)
            } else if s < high {
                Ok(Class::Two)
            } else {
                Ok(Class::Three)
            }
        })
        .collect()
}

/// Output of the exhaustive node-removal oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalityResult<T = f64> {
    /// Effective graph resistance of the intact graph.
    pub baseline: T,
    /// `R(G - n) - R(G)` per node.
    pub raw_delta: Vec<T>,
    /// Min-max normalized delta: the removal with the lowest residual
    /// resistance (the one that fragments the graph most) scores 0.
    pub score: Vec<T>,
    pub label: Vec<Class>,
    /// All nodes had the same impact; scores fall back to 0.5.
    pub degenerate: bool,
}

impl<T: Real> CriticalityResult<T> {
    pub fn len(&self) -> usize {
        self.raw_delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw_delta.is_empty()
    }

    pub fn class_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for c in &self.label {
            counts[c.index()] += 1;
        }
        counts
    }

    pub fn rows(&self) -> impl Iterator<Item = CriticalityRow> + '_ {
        (0..self.len()).map(move |v| CriticalityRow {
            node_id: v,
            raw_delta: self.raw_delta[v].as_f64(),
            score: self.score[v].as_f64(),
            label: self.label[v],
        })
    }
}

/// One line of the criticality CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityRow {
    pub node_id: usize,
    pub raw_delta: f64,
    pub score: f64,
    pub label: Class,
}

/// Removes every node in turn and measures the residual effective graph
/// resistance. Node subproblems run on the current rayon pool; the result
/// does not depend on scheduling.
pub fn criticality_scores<T: Real>(g: &Graph<T>) -> Result<CriticalityResult<T>> {
    let n = g.node_count();
    if n < 3 {
        return Err(Error::Domain(format!(
            "criticality scoring needs at least 3 nodes, got {n}"
        )));
    }
    let baseline = effective_graph_resistance(g)?;
    let raw_delta = (0..n)
        .into_par_iter()
        .map(|v| {
            let (residual, _) = g.remove_node(v)?;
            Ok(effective_graph_resistance(&residual)? - baseline)
        })
        .collect::<Result<Vec<T>>>()?;

    let lo = raw_delta.iter().copied().fold(T::infinity(), T::min);
    let hi = raw_delta.iter().copied().fold(T::neg_infinity(), T::max);
    let range = hi - lo;
    let degenerate = !(range > T::lit(1e-12) * baseline.abs().max(T::one()));
    let score: Vec<T> = if degenerate {
        log::warn!("all {n} nodes have identical removal impact; assigning score 0.5");
        vec![T::lit(0.5); n]
    } else {
        raw_delta.iter().map(|&d| (d - lo) / range).collect()
    };
    let label = label_nodes(&score)?;
    Ok(CriticalityResult {
        baseline,
        raw_delta,
        score,
        label,
        degenerate,
    })
}

/// CSV with header `node_id,raw_delta,score,label`.
pub fn write_criticality_csv<T: Real, W: Write>(result: &CriticalityResult<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in result.rows() {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct RawRow {
    node_id: usize,
    raw_delta: f64,
    score: f64,
    label: u8,
}

/// Reads a criticality CSV back. Rows may come in any order but must cover
/// node ids `0..n` exactly once; the result is sorted by node id.
pub fn read_criticality_csv<R: Read>(input: R) -> Result<Vec<CriticalityRow>> {
    let mut rows = Vec::new();
    for record in csv::Reader::from_reader(input).deserialize() {
        let raw: RawRow = record?;
        rows.push(CriticalityRow {
            node_id: raw.node_id,
            raw_delta: raw.raw_delta,
            score: raw.score,
            label: Class::from_number(raw.label)?,
        });
    }
    rows.sort_by_key(|r| r.node_id);
    if rows.iter().enumerate().any(|(i, r)| r.node_id != i) {
        return Err(Error::Contract("criticality rows must cover node ids 0..n exactly once".into()));
    }
    Ok(rows)
}
