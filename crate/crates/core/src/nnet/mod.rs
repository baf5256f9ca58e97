//! Minimal dense-network core shared by the IRL, adaptation, and transfer
//! trainers: row-major matrices, feed-forward nets with explicit
//! forward/backward passes, gradient reversal, SGD/Adam, and a
//! finite-difference oracle for checking all of it.

mod dense;
mod fd;
mod loss;
mod matrix;
mod optim;

pub use dense::{
    grad_reverse, Activation, DenseNet, ForwardTrace, Gradients, Layer, LayerGrads, LayerSnapshot,
    NetSnapshot, SIGMOID_CLAMP,
};
pub use fd::{finite_diff_flat, finite_diff_grad, max_relative_error};
pub use loss::{bce_mean, softmax_ce_mean, LOG_FLOOR};
pub use matrix::Matrix;
pub use optim::{optimizer_step, OptimMethod, OptimState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
