//! Scalar abstraction for the numeric kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};
use rustfft::FftNum;

/// Floating-point scalar the signal and model kernels are generic over.
///
/// `FftNum` is required so spectra can be taken of any trace without
/// re-bounding call sites; both `f32` and `f64` qualify.
pub trait Scalar:
    Float + FftNum + FromPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossless-enough conversion from `f64` for constants and parameters.
    fn from_f64_c(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 constant must convert")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
