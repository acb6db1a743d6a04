//! Uniformly sampled waveform type and the cumulative-sum step.

use crate::scalar::Scalar;

use super::SignalError;

/// A uniformly sampled waveform: pulse labels, model predictions, and every
/// intermediate of the post-processing pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PpgTrace<S: Scalar> {
    samples: Vec<S>,
    fs: f64,
}

impl<S: Scalar> PpgTrace<S> {
    /// Validate and wrap samples at sampling rate `fs` (Hz).
    pub fn new(samples: Vec<S>, fs: f64) -> Result<Self, SignalError> {
        if samples.is_empty() {
            return Err(SignalError::EmptyTrace);
        }
        if let Some(idx) = samples.iter().position(|v| !v.is_finite()) {
            return Err(SignalError::NonFiniteSample(idx));
        }
        if fs.is_nan() || fs <= 0.0 || !fs.is_finite() {
            return Err(SignalError::NonPositiveRate(fs));
        }
        Ok(Self { samples, fs })
    }

    pub fn samples(&self) -> &[S] {
        &self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    /// Consume the trace, returning its samples.
    pub fn into_samples(self) -> Vec<S> {
        self.samples
    }

    /// Same sampling rate, new samples; panics in debug if they are invalid.
    /// Internal shortcut for pipeline stages that preserve validity.
    pub(crate) fn with_samples(&self, samples: Vec<S>) -> Self {
        debug_assert!(!samples.is_empty());
        debug_assert!(samples.iter().all(|v| v.is_finite()));
        Self {
            samples,
            fs: self.fs,
        }
    }
}

/// Running sum of the trace: `out[k] = Σ_{j≤k} in[j]`.
///
/// First step of the post-processing pipeline, converting a derivative
/// signal back to the waveform it came from (up to an offset and trend).
pub fn cumulative_sum<S: Scalar>(trace: &PpgTrace<S>) -> PpgTrace<S> {
    let mut acc = S::zero();
    let out: Vec<S> = trace
        .samples()
        .iter()
        .map(|&v| {
            acc += v;
            acc
        })
        .collect();
    trace.with_samples(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tr(v: &[f64]) -> PpgTrace<f64> {
        PpgTrace::new(v.to_vec(), 30.0).unwrap()
    }

    #[test]
    fn cumsum_ones() {
        assert_eq!(cumulative_sum(&tr(&[1.0, 1.0, 1.0])).samples(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn cumsum_zeros() {
        assert_eq!(cumulative_sum(&tr(&[0.0, 0.0, 0.0])).samples(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn cumsum_first_differences_invert() {
        let input = [0.3, -1.2, 4.0, 2.5, -0.7];
        let out = cumulative_sum(&tr(&input));
        let s = out.samples();
        assert_eq!(s[0], input[0]);
        for k in 1..input.len() {
            assert!((s[k] - s[k - 1] - input[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_empty_and_nonfinite() {
        assert_eq!(
            PpgTrace::<f64>::new(vec![], 30.0).unwrap_err(),
            SignalError::EmptyTrace
        );
        assert_eq!(
            PpgTrace::new(vec![1.0, f64::NAN], 30.0).unwrap_err(),
            SignalError::NonFiniteSample(1)
        );
        assert_eq!(
            PpgTrace::new(vec![1.0], 0.0).unwrap_err(),
            SignalError::NonPositiveRate(0.0)
        );
    }

    #[test]
    fn generic_over_f32() {
        let t = PpgTrace::new(vec![1.0f32, 2.0, 3.0], 30.0).unwrap();
        assert_eq!(cumulative_sum(&t).samples(), &[1.0f32, 3.0, 6.0]);
    }
}
