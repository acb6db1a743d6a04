//! Per-frame pulse-derivative regressor.
//!
//! A two-layer perceptron (input → tanh hidden → scalar) applied
//! independently to each normalized difference frame of a training window.
//! Parameters are plain values; training code owns a private mutable copy
//! per client, so concurrent training never shares state.

mod adam;
mod net;
mod params;

pub use adam::{adam_step, OptimizerState};
pub use net::{forward, loss_and_grad, make_difference_frames, TrainingWindow, WINDOW_FRAMES};
pub use params::{GradientSet, LayerParams, ModelParams};

use thiserror::Error;

/// Errors from model construction and training.
#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("layer {layer}: shape mismatch ({detail})")]
    ShapeMismatch { layer: String, detail: String },
    #[error("input dimension {got} does not match first layer ({expected})")]
    InputDimMismatch { got: usize, expected: usize },
    #[error("window has {inputs} inputs but {targets} targets")]
    WindowLengthMismatch { inputs: usize, targets: usize },
    #[error("numerical overflow in training")]
    NumericalOverflow,
}
