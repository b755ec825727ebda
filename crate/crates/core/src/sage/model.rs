use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeFeatures};
use crate::nn::{relu, softmax_rows, weighted_cross_entropy, Activation, DenseLayer, DropoutMask};
use crate::robustness::Class;
use crate::scalar::Real;

/// Layer widths. The defaults are three aggregation layers of 64, 32 and
/// 16 units and a head of 10 and 3 units.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub sage_dims: Vec<usize>,
    pub head_dims: Vec<usize>,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            input_dim: NodeFeatures::<f64>::DIM,
            sage_dims: vec![64, 32, 16],
            head_dims: vec![10, 3],
        }
    }
}

impl Architecture {
    pub fn embedding_dim(&self) -> usize {
        *self.sage_dims.last().unwrap_or(&self.input_dim)
    }

    pub fn classes(&self) -> usize {
        *self.head_dims.last().expect("non-empty head")
    }

    /// Widths of every layer followed by dropout (all but the output).
    pub fn hidden_dims(&self) -> Vec<usize> {
        let head_hidden = &self.head_dims[..self.head_dims.len() - 1];
        self.sage_dims.iter().chain(head_hidden).copied().collect()
    }
}

/// Trainable parameters. Aggregation layer `k` maps
/// `concat(h_v, mean_{u ~ v} h_u)` to the next width through a relu.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ModelParams<T = f64> {
    pub sage: Vec<DenseLayer<T>>,
    pub head: Vec<DenseLayer<T>>,
}

impl<T: Real> ModelParams<T> {
    /// Glorot-uniform initialization from `seed`.
    pub fn init(arch: &Architecture, seed: u64) -> Result<Self> {
        if arch.sage_dims.is_empty() || arch.head_dims.is_empty() {
            return Err(Error::Parameter("architecture needs aggregation and head layers".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut width = arch.input_dim;
        let mut sage = Vec::new();
        for &out in &arch.sage_dims {
            sage.push(DenseLayer::glorot(2 * width, out, Activation::Relu, &mut rng));
            width = out;
        }
        let mut head = Vec::new();
        for (k, &out) in arch.head_dims.iter().enumerate() {
            let act = if k + 1 == arch.head_dims.len() {
                Activation::Softmax
            } else {
                Activation::Relu
            };
            head.push(DenseLayer::glorot(width, out, act, &mut rng));
            width = out;
        }
        Ok(Self { sage, head })
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            input_dim: self.sage.first().map_or(0, |l| l.input_dim() / 2),
            sage_dims: self.sage.iter().map(|l| l.output_dim()).collect(),
            head_dims: self.head.iter().map(|l| l.output_dim()).collect(),
        }
    }

    /// Checks the width chain.
    pub fn validate(&self) -> Result<()> {
        let mut width = self.sage.first().map_or(0, |l| l.input_dim() / 2);
        for (k, l) in self.sage.iter().enumerate() {
            if l.input_dim() != 2 * width || l.bias.len() != l.output_dim() {
                return Err(Error::Contract(format!("aggregation layer {k} has inconsistent shape")));
            }
            width = l.output_dim();
        }
        for (k, l) in self.head.iter().enumerate() {
            if l.input_dim() != width || l.bias.len() != l.output_dim() {
                return Err(Error::Contract(format!("head layer {k} has inconsistent shape")));
            }
            width = l.output_dim();
        }
        Ok(())
    }

    fn layers(&self) -> impl Iterator<Item = &DenseLayer<T>> {
        self.sage.iter().chain(self.head.iter())
    }

    fn layers_mut(&mut self) -> impl Iterator<Item = &mut DenseLayer<T>> {
        self.sage.iter_mut().chain(self.head.iter_mut())
    }

    pub fn param_count(&self) -> usize {
        self.layers().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// All weights and biases, layer by layer, weights row-major first.
    pub fn to_flat(&self) -> Vec<T> {
        let mut flat = Vec::with_capacity(self.param_count());
        for l in self.layers() {
            flat.extend(l.weight.iter());
            flat.extend(l.bias.iter());
        }
        flat
    }

    pub fn set_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Contract(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                flat.len()
            )));
        }
        let mut off = 0;
        for l in self.layers_mut() {
            for w in l.weight.iter_mut() {
                *w = flat[off];
                off += 1;
            }
            for b in l.bias.iter_mut() {
                *b = flat[off];
                off += 1;
            }
        }
        Ok(())
    }
}

/// Row-normalized weighted adjacency in CSR form: row `v` averages its
/// neighbors with weights proportional to edge weights. Isolated nodes
/// have empty rows and therefore a zero neighbor term.
#[derive(Debug, Clone)]
pub struct NeighborMean<T = f64> {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Real> NeighborMean<T> {
    pub fn new(g: &Graph<T>) -> Self {
        Self::build(g, |v| g.neighbors(v).to_vec())
    }

    /// Averages over at most `cap` uniformly sampled neighbors per node.
    pub fn with_sample_cap(g: &Graph<T>, cap: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::build(g, |v| {
            let nb = g.neighbors(v);
            if nb.len() <= cap {
                nb.to_vec()
            } else {
                let mut picked = sample(&mut rng, nb.len(), cap).into_vec();
                picked.sort_unstable();
                picked.into_iter().map(|i| nb[i]).collect()
            }
        })
    }

    fn build(g: &Graph<T>, mut neighbors: impl FnMut(usize) -> Vec<(usize, T)>) -> Self {
        let n = g.node_count();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for v in 0..n {
            let nb = neighbors(v);
            let total: T = nb.iter().map(|&(_, w)| w).sum();
            for (u, w) in nb {
                cols.push(u);
                vals.push(w / total);
            }
            row_ptr.push(cols.len());
        }
        Self { row_ptr, cols, vals }
    }

    pub fn node_count(&self) -> usize {
        self.row_ptr.len() - 1
    }

    /// `P h`.
    pub fn apply(&self, h: ArrayView2<'_, T>) -> Array2<T> {
        let mut out = Array2::zeros(h.raw_dim());
        for v in 0..self.node_count() {
            let mut row = out.row_mut(v);
            for k in self.row_ptr[v]..self.row_ptr[v + 1] {
                row.scaled_add(self.vals[k], &h.row(self.cols[k]));
            }
        }
        out
    }

    /// `P^T d`.
    pub fn apply_transpose(&self, d: ArrayView2<'_, T>) -> Array2<T> {
        let mut out = Array2::zeros(d.raw_dim());
        for v in 0..self.node_count() {
            let src = d.row(v);
            for k in self.row_ptr[v]..self.row_ptr[v + 1] {
                out.row_mut(self.cols[k]).scaled_add(self.vals[k], &src);
            }
        }
        out
    }
}

/// One dropout mask per hidden layer, each covering `nodes x width`
/// activations.
#[derive(Debug, Clone)]
pub struct Masks<T = f64> {
    pub layers: Vec<DropoutMask<T>>,
}

impl<T: Real> Masks<T> {
    pub fn sample<R: Rng>(nodes: usize, arch: &Architecture, rate: f64, rng: &mut R) -> Result<Self> {
        let layers = arch
            .hidden_dims()
            .into_iter()
            .map(|w| DropoutMask::from_rng(nodes * w, rate, rng))
            .collect::<Result<_>>()?;
        Ok(Self { layers })
    }
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass<T = f64> {
    /// Output-layer pre-activations, `N x classes`.
    pub logits: Array2<T>,
    pub probs: Array2<T>,
    /// Output of the last aggregation layer, `N x embedding_dim`.
    pub embeddings: Array2<T>,
    /// Input to every layer (concatenated for aggregation layers).
    inputs: Vec<Array2<T>>,
    pre: Vec<Array2<T>>,
}

fn apply_mask<T: Real>(a: &mut Array2<T>, mask: Option<&DropoutMask<T>>) -> Result<()> {
    if let Some(mask) = mask {
        if !a.is_standard_layout() {
            *a = a.as_standard_layout().into_owned();
        }
        let slice = a
            .as_slice_mut()
            .ok_or_else(|| Error::Contract("activation not contiguous".into()))?;
        mask.apply_in_place(slice)?;
    }
    Ok(())
}

fn check_inputs<T: Real>(agg: &NeighborMean<T>, x: ArrayView2<'_, T>, params: &ModelParams<T>) -> Result<()> {
    if x.nrows() != agg.node_count() {
        return Err(Error::Contract(format!(
            "{} feature rows for a graph with {} nodes",
            x.nrows(),
            agg.node_count()
        )));
    }
    let arch = params.architecture();
    if x.ncols() != arch.input_dim {
        return Err(Error::Contract(format!(
            "model expects {} features, got {}",
            arch.input_dim,
            x.ncols()
        )));
    }
    params.validate()
}

pub(crate) fn forward<T: Real>(
    agg: &NeighborMean<T>,
    x: ArrayView2<'_, T>,
    params: &ModelParams<T>,
    masks: Option<&Masks<T>>,
) -> Result<ForwardPass<T>> {
    check_inputs(agg, x, params)?;
    let mask_at = |k: usize| masks.and_then(|m| m.layers.get(k));
    if let Some(m) = masks {
        if m.layers.len() != params.architecture().hidden_dims().len() {
            return Err(Error::Contract("wrong number of dropout masks".into()));
        }
    }
    let mut inputs = Vec::new();
    let mut pre = Vec::new();
    let mut h = x.to_owned();
    for (k, layer) in params.sage.iter().enumerate() {
        let neighbor = agg.apply(h.view());
        let cat = concatenate![Axis(1), h, neighbor];
        let z = cat.dot(&layer.weight.t()) + &layer.bias;
        let mut a = z.mapv(relu);
        apply_mask(&mut a, mask_at(k))?;
        inputs.push(cat);
        pre.push(z);
        h = a;
    }
    let embeddings = h.clone();
    let depth = params.sage.len();
    let mut logits = Array2::zeros((0, 0));
    for (k, layer) in params.head.iter().enumerate() {
        let z = h.dot(&layer.weight.t()) + &layer.bias;
        inputs.push(h);
        if k + 1 == params.head.len() {
            logits = z.clone();
            pre.push(z);
            h = Array2::zeros((0, 0));
        } else {
            let mut a = z.mapv(relu);
            apply_mask(&mut a, mask_at(depth + k))?;
            pre.push(z);
            h = a;
        }
    }
    let probs = softmax_rows(logits.view());
    Ok(ForwardPass {
        logits,
        probs,
        embeddings,
        inputs,
        pre,
    })
}

impl<T: Real> ForwardPass<T> {
    /// Pre-activations of every layer, output layer last.
    pub fn pre_activations(&self) -> &[Array2<T>] {
        &self.pre
    }

    /// Distance of the closest pre-activation to the relu kink.
    pub fn min_abs_preactivation(&self) -> T {
        self.pre
            .iter()
            .flat_map(|z| z.iter())
            .fold(T::infinity(), |m, &v| m.min(v.abs()))
    }
}

/// Full forward pass with every intermediate activation.
pub fn sage_forward_pass<T: Real>(
    g: &Graph<T>,
    x: &NodeFeatures<T>,
    params: &ModelParams<T>,
    masks: Option<&Masks<T>>,
) -> Result<ForwardPass<T>> {
    forward(&NeighborMean::new(g), x.view(), params, masks)
}

/// Logits (`N x 3`) and embeddings (`N x 16`) for every node.
pub fn sage_forward<T: Real>(
    g: &Graph<T>,
    x: &NodeFeatures<T>,
    params: &ModelParams<T>,
    masks: Option<&Masks<T>>,
) -> Result<(Array2<T>, Array2<T>)> {
    let pass = forward(&NeighborMean::new(g), x.view(), params, masks)?;
    Ok((pass.logits, pass.embeddings))
}

/// Gradient of a loss given its derivative with respect to the logits.
pub(crate) fn backward<T: Real>(
    agg: &NeighborMean<T>,
    params: &ModelParams<T>,
    pass: &ForwardPass<T>,
    masks: Option<&Masks<T>>,
    dlogits: Array2<T>,
) -> Result<Vec<T>> {
    let depth = params.sage.len();
    let layers: Vec<&DenseLayer<T>> = params.sage.iter().chain(params.head.iter()).collect();
    let total = layers.len();
    let mut grads: Vec<(Array2<T>, Array1<T>)> = Vec::with_capacity(total);
    let mut delta = dlogits;
    for k in (0..total).rev() {
        let layer = layers[k];
        // delta is the gradient with respect to this layer's pre-activation.
        let gw = delta.t().dot(&pass.inputs[k]);
        let gb = delta.sum_axis(Axis(0));
        grads.push((gw, gb));
        if k == 0 {
            break;
        }
        let dinput = delta.dot(&layer.weight);
        let mut dh = if k < depth {
            let width = dinput.ncols() / 2;
            let own = dinput.slice(s![.., ..width]);
            let nb = agg.apply_transpose(dinput.slice(s![.., width..]));
            &own + &nb
        } else {
            dinput
        };
        // Back through the previous layer's mask and relu.
        if let Some(mask) = masks.and_then(|m| m.layers.get(k - 1)) {
            apply_mask(&mut dh, Some(mask))?;
        }
        let prev_pre = &pass.pre[k - 1];
        dh.zip_mut_with(prev_pre, |d, &z| {
            if z <= T::zero() {
                *d = T::zero();
            }
        });
        delta = dh;
    }
    grads.reverse();
    let mut flat = Vec::with_capacity(params.param_count());
    for (gw, gb) in grads {
        flat.extend(gw.iter());
        flat.extend(gb.iter());
    }
    Ok(flat)
}

/// Mean class-weighted cross-entropy over `labeled` and its gradient with
/// respect to the flattened parameters.
pub fn loss_and_gradient<T: Real>(
    agg: &NeighborMean<T>,
    x: ArrayView2<'_, T>,
    params: &ModelParams<T>,
    labeled: &[(usize, Class)],
    class_weights: &[T],
    masks: Option<&Masks<T>>,
) -> Result<(T, Vec<T>)> {
    if labeled.is_empty() {
        return Err(Error::Parameter("labeled set is empty".into()));
    }
    let pass = forward(agg, x, params, masks)?;
    let n = x.nrows();
    let scale = T::one() / T::from_usize_lossy(labeled.len());
    let mut dlogits = Array2::zeros(pass.logits.raw_dim());
    let mut loss = T::zero();
    for &(v, class) in labeled {
        if v >= n {
            return Err(Error::Index { index: v, nodes: n });
        }
        let ce = weighted_cross_entropy(pass.probs.row(v), class.index(), class_weights)?;
        loss += ce.loss * scale;
        dlogits.row_mut(v).scaled_add(scale, &ce.grad_logits);
    }
    let grad = backward(agg, params, &pass, masks, dlogits)?;
    Ok((loss, grad))
}
