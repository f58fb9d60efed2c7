//! A small 1-D convolutional network, written out by hand: layers, forward
//! and backward passes, mini-batch and stochastic gradient descent, gradient
//! checking and a binary model format.

mod io;
pub(crate) mod layer;
mod model;
mod tensor;
mod train;

pub use io::{load_model, read_model, save_model, write_model, MODEL_MAGIC, MODEL_VERSION};
pub use layer::{softmax, Layer};
pub use model::{ArchSpec, Gradients, Model, Optimizer, NUM_CLASSES};
pub use tensor::Tensor2;
pub use train::{
    analytic_gradient, fit, grad_check, mean_loss, numeric_gradient, relative_error, train_step, Example,
    TrainConfig, TrainReport, GRAD_CHECK_FLOOR,
};
