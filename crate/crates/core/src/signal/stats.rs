//! Error and agreement metrics over paired sequences.

use crate::scalar::Scalar;

use super::SignalError;

/// Mean absolute error between paired sequences.
pub fn mae<S: Scalar>(pred: &[S], truth: &[S]) -> Result<S, SignalError> {
    if pred.is_empty() || truth.is_empty() {
        return Err(SignalError::EmptyTrace);
    }
    if pred.len() != truth.len() {
        return Err(SignalError::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    let total: S = pred
        .iter()
        .zip(truth)
        .map(|(&p, &t)| (p - t).abs())
        .sum();
    Ok(total / S::from_f64_c(pred.len() as f64))
}

/// Sample Pearson correlation coefficient.
///
/// Errors on constant inputs, where the coefficient is undefined.
pub fn pearson<S: Scalar>(pred: &[S], truth: &[S]) -> Result<S, SignalError> {
    if pred.len() != truth.len() {
        return Err(SignalError::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if pred.len() < 2 {
        return Err(SignalError::TraceTooShort { min_len: 2 });
    }
    let n = S::from_f64_c(pred.len() as f64);
    let mean_p = pred.iter().copied().sum::<S>() / n;
    let mean_t = truth.iter().copied().sum::<S>() / n;
    let mut cov = S::zero();
    let mut var_p = S::zero();
    let mut var_t = S::zero();
    for (&p, &t) in pred.iter().zip(truth) {
        let dp = p - mean_p;
        let dt = t - mean_t;
        cov += dp * dt;
        var_p += dp * dp;
        var_t += dt * dt;
    }
    if var_p == S::zero() || var_t == S::zero() {
        return Err(SignalError::ConstantInput);
    }
    let r = cov / (var_p.sqrt() * var_t.sqrt());
    // Rounding can push |r| a hair past 1.
    Ok(r.max(-S::one()).min(S::one()))
}
