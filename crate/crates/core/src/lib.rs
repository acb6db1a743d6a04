//! Building blocks for simulating federated training of a camera-based
//! pulse regressor under controlled video and label noise.
//!
//! The crate is organized around five subsystems:
//!
//! - [`signal`]: waveform primitives: cumulative sum, smoothness-priors
//!   detrending, zero-phase Butterworth bandpass filtering, power spectra,
//!   spectral heart-rate estimation, SNR, and error metrics.
//! - [`synth`]: deterministic synthetic subjects (video frames plus a
//!   reference pulse trace) with per-subject Gaussian noise injection and a
//!   bit-exact on-disk dataset format.
//! - [`model`]: a small per-frame regressor mapping normalized difference
//!   frames to the pulse derivative, with analytic gradients and Adam.
//! - [`federation`]: the client/server round loop with uniform (FedAvg) and
//!   signal-quality-weighted (FedWeight) aggregation, plus a binary
//!   checkpoint format for exchanged parameters.
//! - [`evaluation`]: the post-processing pipeline (cumulative sum, detrend,
//!   windowing, bandpass, spectral peak) and per-run MAE / SNR / Pearson
//!   scoring.
//!
//! Numeric kernels are generic over the [`scalar::Scalar`] float type;
//! concrete `f64` aliases are exported at the crate root since the wire and
//! file formats pin that width.

pub mod evaluation;
pub mod federation;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod signal;
pub mod synth;

pub use scalar::Scalar;

/// Waveform with `f64` samples, the width used throughout the pipeline.
pub type PpgTrace64 = signal::PpgTrace<f64>;
/// One-sided power spectrum over `f64`.
pub type PowerSpectrum64 = signal::PowerSpectrum<f64>;
/// Model parameters over `f64`, the width of the checkpoint format.
pub type ModelParams64 = model::ModelParams<f64>;
/// Gradients over `f64`.
pub type GradientSet64 = model::GradientSet<f64>;
/// Adam state over `f64`.
pub type OptimizerState64 = model::OptimizerState<f64>;
