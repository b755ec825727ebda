use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::distance::DistanceMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphLearnConfig {
    /// Weight of the log-degree barrier.
    pub alpha: f64,
    /// Weight of the squared Frobenius penalty.
    pub beta: f64,
    pub max_iters: usize,
    /// Relative objective change that counts as converged once it holds
    /// for several consecutive steps.
    pub tolerance: f64,
    /// Projected-gradient residual that counts as converged.
    pub kkt_tolerance: f64,
    /// First trial step; later steps use the Barzilai-Borwein estimate.
    pub step_size: f64,
    pub sparsify_ratio: f64,
}

impl Default for GraphLearnConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.5,
            max_iters: 20_000,
            tolerance: 1e-14,
            kkt_tolerance: 1e-8,
            step_size: 1e-2,
            sparsify_ratio: 0.05,
        }
    }
}

impl GraphLearnConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} must be positive, got {v}")))
            }
        };
        positive("alpha", self.alpha)?;
        positive("beta", self.beta)?;
        positive("step_size", self.step_size)?;
        if self.max_iters == 0 {
            return Err(Error::Parameter("max_iters must be positive".into()));
        }
        if !(self.tolerance >= 0.0) || !(self.kkt_tolerance >= 0.0) {
            return Err(Error::Parameter("tolerances must be nonnegative".into()));
        }
        if !(0.0..1.0).contains(&self.sparsify_ratio) {
            return Err(Error::Parameter(format!(
                "sparsify_ratio {} outside [0, 1)",
                self.sparsify_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Kkt,
    ObjectiveChange,
    MaxIters,
    /// Backtracking could not find a decrease; the iterate is at the
    /// resolution limit of the arithmetic.
    LineSearch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    pub kkt_residual: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnedAdjacency<T = f64> {
    /// Symmetric, nonnegative, zero diagonal, positive row sums.
    pub weights: Array2<T>,
    pub objective: T,
    pub iterations: usize,
    pub kkt_residual: T,
    pub stop: StopReason,
    pub trace: Vec<TraceRow>,
}

impl<T: Real> LearnedAdjacency<T> {
    /// Wraps an externally supplied weight matrix after checking its
    /// invariants. Solver statistics are left empty.
    pub fn from_weights(weights: Array2<T>) -> Result<Self> {
        let n = weights.nrows();
        if weights.ncols() != n {
            return Err(Error::Contract("adjacency must be square".into()));
        }
        for i in 0..n {
            if weights[[i, i]] != T::zero() {
                return Err(Error::Contract(format!("nonzero diagonal at {i}")));
            }
            let mut row = T::zero();
            for j in 0..n {
                let a = weights[[i, j]];
                if !(a >= T::zero()) || !a.is_finite() || a != weights[[j, i]] {
                    return Err(Error::Contract(format!("invalid adjacency entry ({i}, {j})")));
                }
                row += a;
            }
            if !(row > T::zero()) {
                return Err(Error::Contract(format!("row {i} has zero degree")));
            }
        }
        Ok(Self {
            weights,
            objective: T::nan(),
            iterations: 0,
            kkt_residual: T::nan(),
            stop: StopReason::MaxIters,
            trace: Vec::new(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.weights.nrows()
    }

    pub fn degrees(&self) -> Vec<T> {
        self.weights.rows().into_iter().map(|r| r.sum()).collect()
    }
}

/// The objective restricted to the strict upper triangle, stored row-major.
struct Problem<T> {
    n: usize,
    z: Vec<T>,
    alpha: T,
    beta: T,
}

impl<T: Real> Problem<T> {
    fn new(z: &DistanceMatrix<T>, cfg: &GraphLearnConfig) -> Self {
        let n = z.len();
        let mut upper = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                upper.push(z.get(i, j));
            }
        }
        Self {
            n,
            z: upper,
            alpha: T::lit(cfg.alpha),
            beta: T::lit(cfg.beta),
        }
    }

    fn degrees(&self, w: &[T]) -> Vec<T> {
        let mut d = vec![T::zero(); self.n];
        let mut k = 0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                d[i] += w[k];
                d[j] += w[k];
                k += 1;
            }
        }
        d
    }

    /// `None` when some degree is not strictly positive.
    fn objective(&self, w: &[T], d: &[T]) -> Option<T> {
        if d.iter().any(|&x| !(x > T::zero())) {
            return None;
        }
        let two = T::lit(2.0);
        let smooth: T = w
            .iter()
            .zip(&self.z)
            .map(|(&a, &z)| two * a * (z + self.beta * a))
            .sum();
        let barrier: T = d.iter().map(|x| x.ln()).sum();
        let f = smooth - self.alpha * barrier;
        f.is_finite().then_some(f)
    }

    /// Derivative with respect to the shared value of `A_ij = A_ji`.
    fn gradient(&self, w: &[T], d: &[T], g: &mut [T]) {
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        let inv: Vec<T> = d.iter().map(|&x| self.alpha / x).collect();
        let mut k = 0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                g[k] = two * self.z[k] + four * self.beta * w[k] - inv[i] - inv[j];
                k += 1;
            }
        }
    }

    fn into_matrix(&self, w: &[T]) -> Array2<T> {
        let mut a = Array2::zeros((self.n, self.n));
        let mut k = 0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                a[[i, j]] = w[k];
                a[[j, i]] = w[k];
                k += 1;
            }
        }
        a
    }
}

fn kkt_residual<T: Real>(w: &[T], g: &[T]) -> T {
    w.iter().zip(g).fold(T::zero(), |acc, (&a, &gi)| {
        let r = if a > T::zero() { gi.abs() } else { (-gi).max(T::zero()) };
        acc.max(r)
    })
}

/// Uniform weight minimizing the objective when every distance equals `z`.
fn uniform_start<T: Real>(z: T, n: usize, alpha: T, beta: T) -> T {
    let two = T::lit(2.0);
    let m = T::from_usize_lossy(n - 1);
    let disc = (two * z) * (two * z) + T::lit(32.0) * alpha * beta / m;
    (disc.sqrt() - two * z) / (T::lit(8.0) * beta)
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
const FLAT_STEPS: usize = 10;

pub fn learn_graph_map<T: Real>(z: &DistanceMatrix<T>, cfg: &GraphLearnConfig) -> Result<LearnedAdjacency<T>> {
    cfg.validate()?;
    let n = z.len();
    if n < 2 {
        return Err(Error::Parameter(format!("graph learning needs at least two nodes, got {n}")));
    }
    let p = Problem::new(z, cfg);
    let m = p.z.len();
    let w0 = uniform_start(z.mean_off_diagonal(), n, p.alpha, p.beta);
    let mut w = vec![w0; m];
    let mut d = p.degrees(&w);
    let mut f = p
        .objective(&w, &d)
        .ok_or_else(|| Error::Numeric("initial point infeasible".into()))?;
    let mut g = vec![T::zero(); m];
    p.gradient(&w, &d, &mut g);
    let mut kkt = kkt_residual(&w, &g);

    let armijo = T::lit(ARMIJO);
    let min_step = T::lit(1e-30);
    let max_step = T::lit(1e30);
    let tol = T::lit(cfg.tolerance);
    let kkt_tol = T::lit(cfg.kkt_tolerance);
    let mut step = T::lit(cfg.step_size);
    let mut trace = vec![TraceRow {
        iter: 0,
        objective: f.as_f64(),
        kkt_residual: kkt.as_f64(),
        step: 0.0,
    }];
    let mut w_new = vec![T::zero(); m];
    let mut g_new = vec![T::zero(); m];
    let mut iterations = 0;
    let mut flat = 0;
    let mut stop = if kkt <= kkt_tol { StopReason::Kkt } else { StopReason::MaxIters };

    while stop == StopReason::MaxIters && iterations < cfg.max_iters {
        let mut t = step;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let mut decrease = T::zero();
            for k in 0..m {
                w_new[k] = (w[k] - t * g[k]).max(T::zero());
                decrease += g[k] * (w_new[k] - w[k]);
            }
            let d_new = p.degrees(&w_new);
            if let Some(f_new) = p.objective(&w_new, &d_new) {
                if f_new <= f + armijo * decrease {
                    accepted = Some((f_new, d_new));
                    break;
                }
            }
            t = t * T::lit(0.5);
        }
        let Some((f_new, d_new)) = accepted else {
            stop = StopReason::LineSearch;
            break;
        };
        iterations += 1;
        p.gradient(&w_new, &d_new, &mut g_new);

        let mut ss = T::zero();
        let mut sy = T::zero();
        for k in 0..m {
            let s = w_new[k] - w[k];
            ss += s * s;
            sy += s * (g_new[k] - g[k]);
        }
        step = if sy > T::zero() { (ss / sy).max(min_step).min(max_step) } else { T::lit(cfg.step_size) };

        let change = (f - f_new).abs();
        std::mem::swap(&mut w, &mut w_new);
        std::mem::swap(&mut g, &mut g_new);
        d = d_new;
        f = f_new;
        kkt = kkt_residual(&w, &g);
        trace.push(TraceRow {
            iter: iterations,
            objective: f.as_f64(),
            kkt_residual: kkt.as_f64(),
            step: t.as_f64(),
        });
        if kkt <= kkt_tol {
            stop = StopReason::Kkt;
        } else if change <= tol * f.abs().max(T::one()) {
            flat += 1;
            if flat >= FLAT_STEPS {
                stop = StopReason::ObjectiveChange;
            }
        } else {
            flat = 0;
        }
    }
    if iterations == 0 && stop == StopReason::LineSearch {
        return Err(Error::Numeric(format!(
            "line search failed at the starting point (objective {f}, KKT residual {kkt})"
        )));
    }
    if d.iter().any(|&x| !(x > T::zero())) {
        return Err(Error::Numeric("learned adjacency has an empty row".into()));
    }
    log::debug!("graph learning stopped after {iterations} iterations ({stop:?}), KKT residual {kkt}");
    Ok(LearnedAdjacency {
        weights: p.into_matrix(&w),
        objective: f,
        iterations,
        kkt_residual: kkt,
        stop,
        trace,
    })
}

pub fn write_trace_csv<W: Write>(trace: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in trace {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
