//! Dense-network numerics: forward/backward passes, losses, Adam, and gradient oracles.

mod dense;
mod gradcheck;
mod loss;
mod matrix;
mod optim;

pub use dense::{Activation, DenseNet, Gradients, Layer, Trace};
pub use gradcheck::{finite_difference_gradient, grad_check, max_relative_deviation};
pub use loss::{
    cross_entropy, cross_entropy_with_grad, elementwise_sq_err, entropy, log_softmax, mse,
    mse_with_grad, softmax, LossGrad,
};
pub use matrix::Matrix;
pub use optim::{AdamConfig, AdamState};

pub(crate) use dense::hex;
