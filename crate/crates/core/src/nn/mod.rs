//! Small neural-network kernel: dense layers, activations, weighted
//! cross-entropy, ADAM and dropout, with analytic gradients that can be
//! checked against finite differences.

mod adam;
mod dropout;
mod gradcheck;
mod layer;
mod loss;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use dropout::{apply_dropout, DropoutMask};
pub use gradcheck::{finite_difference_gradient, gradient_check, relative_error, GradientCheck};
pub use layer::{dense_forward, relu, softmax, softmax_rows, Activation, DenseLayer, DenseOutput};
pub use loss::{weighted_cross_entropy, CrossEntropy};
