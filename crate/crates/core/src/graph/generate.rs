use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Graph;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Holme–Kim growth: preferential attachment with probabilistic triad
/// closure. Every new node brings `m` unit-weight edges.
pub fn generate_power_law_cluster<T: Real>(n: usize, m: usize, p: f64, seed: u64) -> Result<Graph<T>> {
    if m < 1 || n < m + 1 {
        return Err(Error::Parameter(format!(
            "power-law cluster graph needs n >= m + 1 >= 2 (n = {n}, m = {m})"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("triad probability {p} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::new(n);
    // Each node appears once per incident edge (plus the seed nodes once).
    let mut repeated: Vec<usize> = (0..m).collect();
    for source in m..n {
        let mut targets = random_subset(&repeated, m, &mut rng);
        let mut target = targets.pop().expect("m >= 1 targets");
        g.add_edge(source, target, T::one())?;
        repeated.push(target);
        let mut count = 1;
        while count < m {
            if rng.gen::<f64>() < p {
                let closing: Vec<usize> = g
                    .neighbors(target)
                    .iter()
                    .map(|&(v, _)| v)
                    .filter(|&v| v != source && !g.has_edge(source, v))
                    .collect();
                if !closing.is_empty() {
                    let v = closing[rng.gen_range(0..closing.len())];
                    g.add_edge(source, v, T::one())?;
                    repeated.push(v);
                    count += 1;
                    continue;
                }
            }
            // Triad closure may already have consumed a sampled target.
            target = loop {
                let t = targets.pop().expect("enough sampled targets");
                if !g.has_edge(source, t) {
                    break t;
                }
                if targets.is_empty() {
                    targets = random_subset(&repeated, m, &mut rng);
                }
            };
            g.add_edge(source, target, T::one())?;
            repeated.push(target);
            count += 1;
        }
        repeated.extend(std::iter::repeat(source).take(m));
    }
    Ok(g)
}

/// `m` distinct values drawn from `pool` with probability proportional to
/// multiplicity, in draw order.
fn random_subset(pool: &[usize], m: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut picked = Vec::with_capacity(m);
    while picked.len() < m {
        let x = pool[rng.gen_range(0..pool.len())];
        if !picked.contains(&x) {
            picked.push(x);
        }
    }
    picked
}

/// Result of [`add_noise_links`].
#[derive(Debug, Clone)]
pub struct NoisyGraph<T = f64> {
    pub graph: Graph<T>,
    /// Edges actually added.
    pub added: usize,
    /// Selected nodes that were already adjacent to every other node.
    pub skipped: usize,
}

/// Picks `ceil(node_fraction * N)` distinct nodes and gives each one a new
/// unit-weight edge to a uniformly random non-neighbor.
pub fn add_noise_links<T: Real>(g: &Graph<T>, node_fraction: f64, seed: u64) -> Result<NoisyGraph<T>> {
    if !(node_fraction > 0.0 && node_fraction <= 1.0) {
        return Err(Error::Parameter(format!(
            "noise node fraction {node_fraction} outside (0, 1]"
        )));
    }
    let n = g.node_count();
    let count = ((node_fraction * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let count = count.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let selected = sample(&mut rng, n, count).into_vec();
    let mut out = g.clone();
    let (mut added, mut skipped) = (0, 0);
    for u in selected {
        let candidates: Vec<usize> = (0..n).filter(|&v| v != u && !out.has_edge(u, v)).collect();
        if candidates.is_empty() {
            skipped += 1;
            continue;
        }
        let v = candidates[rng.gen_range(0..candidates.len())];
        out.add_edge(u, v, T::one())?;
        added += 1;
    }
    Ok(NoisyGraph { graph: out, added, skipped })
}
