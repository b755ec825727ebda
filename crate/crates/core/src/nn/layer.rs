use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Softmax,
    Identity,
}

/// `activation(W x + b)` with `W` stored as `out x in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DenseLayer<T = f64> {
    pub weight: Array2<T>,
    pub bias: Array1<T>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOutput<T = f64> {
    pub output: Array1<T>,
    pub pre_activation: Array1<T>,
}

impl<T: Real> DenseLayer<T> {
    pub fn new(weight: Array2<T>, bias: Array1<T>, activation: Activation) -> Result<Self> {
        if weight.nrows() != bias.len() {
            return Err(Error::Contract(format!(
                "weight has {} rows but bias has {} entries",
                weight.nrows(),
                bias.len()
            )));
        }
        if weight.iter().chain(bias.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Contract("non-finite layer parameter".into()));
        }
        Ok(Self {
            weight,
            bias,
            activation,
        })
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng>(input: usize, output: usize, activation: Activation, rng: &mut R) -> Self {
        let limit = (6.0 / (input + output) as f64).sqrt();
        let weight = Array2::from_shape_simple_fn((output, input), || T::lit(rng.gen_range(-limit..=limit)));
        Self {
            weight,
            bias: Array1::zeros(output),
            activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn forward(&self, x: ArrayView1<'_, T>) -> Result<DenseOutput<T>> {
        if x.len() != self.input_dim() {
            return Err(Error::Contract(format!(
                "layer expects {} inputs, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        let pre_activation = self.weight.dot(&x) + &self.bias;
        let output = match self.activation {
            Activation::Relu => pre_activation.mapv(relu),
            Activation::Softmax => softmax(pre_activation.view()),
            Activation::Identity => pre_activation.clone(),
        };
        Ok(DenseOutput {
            output,
            pre_activation,
        })
    }

    /// Row-wise forward over a batch (`samples x in`). Returns the
    /// activations and the pre-activations.
    pub fn forward_batch(&self, x: ArrayView2<'_, T>) -> Result<(Array2<T>, Array2<T>)> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Contract(format!(
                "layer expects {} inputs, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        let pre = x.dot(&self.weight.t()) + &self.bias;
        let out = match self.activation {
            Activation::Relu => pre.mapv(relu),
            Activation::Softmax => softmax_rows(pre.view()),
            Activation::Identity => pre.clone(),
        };
        Ok((out, pre))
    }
}

pub fn dense_forward<T: Real>(layer: &DenseLayer<T>, x: ArrayView1<'_, T>) -> Result<DenseOutput<T>> {
    layer.forward(x)
}

#[inline]
pub fn relu<T: Real>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}

/// Numerically stable softmax.
pub fn softmax<T: Real>(z: ArrayView1<'_, T>) -> Array1<T> {
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let mut out = z.mapv(|x| (x - max).exp());
    let sum = out.sum();
    out.mapv_inplace(|x| x / sum);
    out
}

pub fn softmax_rows<T: Real>(z: ArrayView2<'_, T>) -> Array2<T> {
    let mut out = z.to_owned();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let s = softmax(row.view());
        row.assign(&s);
    }
    out
}
