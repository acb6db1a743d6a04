//! Synthetic per-subject datasets: video frames plus a reference pulse
//! trace, with the per-subject Gaussian noise protocol and a bit-exact
//! on-disk format.
//!
//! Generation is embarrassingly parallel: every subject derives its own
//! generator stream from the master seed, so records are identical whether
//! subjects are produced serially or concurrently.

mod dataset;
mod frames;
mod noise;
mod subject;

pub use dataset::{read_dataset, write_dataset, DatasetError};
pub use frames::FrameSequence;
pub use noise::{add_label_noise, add_video_noise, sample_subject_noise, NoiseConfig, NoiseTarget};
pub use subject::{
    generate_subject, generate_subject_with, GeneratorConfig, HrProfile, SubjectRecord,
};

use thiserror::Error;

/// Scale between a paper-style 8-bit video noise level and the normalized
/// [0, 1] intensity scale used here.
pub const VIDEO_NOISE_UNIT: f64 = 1.0 / 255.0;

/// Errors from synthetic generation.
#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("duration too short: need at least {needed} frames, got {got}")]
    DurationTooShort { needed: usize, got: usize },
    #[error("invalid frame geometry: T={t}, H={h}, W={w}")]
    InvalidGeometry { t: usize, h: usize, w: usize },
    #[error("frame intensity at index {0} is not finite")]
    NonFiniteIntensity(usize),
    #[error("label length {label} must be frame count {frames} minus one")]
    LabelLengthMismatch { label: usize, frames: usize },
    #[error("subject noise level must be nonnegative, got {0}")]
    NegativeSigma(f64),
    #[error("HR profile must start at index 0 with ascending segment starts")]
    InvalidHrProfile,
}
