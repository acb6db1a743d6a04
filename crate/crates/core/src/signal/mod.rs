//! Waveform processing primitives.
//!
//! Everything here is a pure function of its inputs; no shared state, safe
//! to call from any number of threads.

mod butter;
mod detrend;
mod spectrum;
mod stats;
mod trace;

pub use butter::{butterworth_bandpass, design_bandpass, BandpassSpec, DigitalFilter};
pub use detrend::{detrend, trend};
pub use spectrum::{estimate_hr, power_spectrum, snr_db, PowerSpectrum, SnrEstimate};
pub use stats::{mae, pearson};
pub use trace::{cumulative_sum, PpgTrace};

use thiserror::Error;

/// Errors from signal-processing operations.
#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("trace must be nonempty")]
    EmptyTrace,
    #[error("trace contains a non-finite sample at index {0}")]
    NonFiniteSample(usize),
    #[error("sampling rate must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("trace too short to detrend")]
    TooShortToDetrend,
    #[error("detrend lambda must be nonnegative")]
    NegativeLambda,
    #[error("invalid band edges: need 0 < low < high < fs/2")]
    InvalidBandEdges,
    #[error("filter order must be at least 1")]
    InvalidFilterOrder,
    #[error("pad_to {pad_to} smaller than trace length {len}")]
    PadTooSmall { pad_to: usize, len: usize },
    #[error("trace shorter than {min_len} samples required here")]
    TraceTooShort { min_len: usize },
    #[error("HR band outside Nyquist")]
    HrBandOutsideNyquist,
    #[error("HR {0} bpm outside the supported (40, 150) range")]
    HrOutOfRange(f64),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("undefined correlation: input is constant")]
    ConstantInput,
}
