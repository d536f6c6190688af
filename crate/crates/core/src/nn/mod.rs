//! Minimal deterministic neural substrate: dense layers with cached
//! forward passes, reverse-mode gradients, BCE-with-logits, Adam and a
//! finite-difference gradient checker.

mod adam;
pub mod checkpoint;
mod dense;
mod gradcheck;
mod loss;
mod tensor;

pub use adam::{adam_step, AdamState};
pub use dense::{Activation, Dense, DenseNet, DEFAULT_LEAKY_SLOPE};
pub use gradcheck::{grad_check, relative_error, GradCheckReport, FD_STEP, MAX_GRAD_CHECK_PARAMS};
pub use loss::{bce_with_logits, bce_with_logits_grad, sigmoid, BceWithLogits, Loss, MeanSquaredError, SquaredError};
pub use tensor::Tensor;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NnError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("state error: {0}")]
    State(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}
