//! Smoothness-priors detrending.
//!
//! The trend of a waveform `z` is the solution of
//! `(I + λ²·D₂ᵀD₂)·t = z`, with `D₂` the second-difference operator; the
//! stationary component is `z − t`. The system matrix is pentadiagonal,
//! symmetric positive definite, so it is solved with a banded Cholesky
//! factorization in O(n); no dense inverse is ever formed.

use crate::scalar::Scalar;

use super::{PpgTrace, SignalError};

/// Stationary component of the trace: `z − trend(z, λ)`.
pub fn detrend<S: Scalar>(trace: &PpgTrace<S>, lambda: f64) -> Result<PpgTrace<S>, SignalError> {
    let t = trend(trace, lambda)?;
    let out: Vec<S> = trace
        .samples()
        .iter()
        .zip(t.samples())
        .map(|(&z, &t)| z - t)
        .collect();
    Ok(trace.with_samples(out))
}

/// Low-frequency trend component `(I + λ²·D₂ᵀD₂)⁻¹·z`.
pub fn trend<S: Scalar>(trace: &PpgTrace<S>, lambda: f64) -> Result<PpgTrace<S>, SignalError> {
    let n = trace.len();
    if n < 3 {
        return Err(SignalError::TooShortToDetrend);
    }
    if lambda.is_nan() || lambda < 0.0 {
        return Err(SignalError::NegativeLambda);
    }
    let lam2 = S::from_f64_c(lambda * lambda);

    // Bands of A = I + λ²·D₂ᵀD₂, accumulated row by row of D₂.
    let mut diag = vec![S::zero(); n];
    let mut off1 = vec![S::zero(); n - 1];
    let mut off2 = vec![S::zero(); n - 2];
    let one = S::one();
    let four = S::from_f64_c(4.0);
    let two = S::from_f64_c(2.0);
    for k in 0..n - 2 {
        diag[k] += one;
        diag[k + 1] += four;
        diag[k + 2] += one;
        off1[k] -= two;
        off1[k + 1] -= two;
        off2[k] += one;
    }
    for d in &mut diag {
        *d = one + lam2 * *d;
    }
    for o in &mut off1 {
        *o = lam2 * *o;
    }
    for o in &mut off2 {
        *o = lam2 * *o;
    }

    let x = solve_pentadiagonal_spd(&diag, &off1, &off2, trace.samples());
    Ok(trace.with_samples(x))
}

/// Cholesky solve of a pentadiagonal SPD system given its lower bands.
fn solve_pentadiagonal_spd<S: Scalar>(diag: &[S], off1: &[S], off2: &[S], rhs: &[S]) -> Vec<S> {
    let n = diag.len();
    let mut l0 = vec![S::zero(); n]; // L[i][i]
    let mut l1 = vec![S::zero(); n.saturating_sub(1)]; // L[i+1][i]
    let mut l2 = vec![S::zero(); n.saturating_sub(2)]; // L[i+2][i]

    for i in 0..n {
        let mut v = diag[i];
        if i >= 1 {
            v -= l1[i - 1] * l1[i - 1];
        }
        if i >= 2 {
            v -= l2[i - 2] * l2[i - 2];
        }
        l0[i] = v.sqrt();
        if i + 1 < n {
            let mut w = off1[i];
            if i >= 1 {
                w -= l2[i - 1] * l1[i - 1];
            }
            l1[i] = w / l0[i];
        }
        if i + 2 < n {
            l2[i] = off2[i] / l0[i];
        }
    }

    // L·y = rhs
    let mut y = vec![S::zero(); n];
    for i in 0..n {
        let mut v = rhs[i];
        if i >= 1 {
            v -= l1[i - 1] * y[i - 1];
        }
        if i >= 2 {
            v -= l2[i - 2] * y[i - 2];
        }
        y[i] = v / l0[i];
    }

    // Lᵀ·x = y
    let mut x = vec![S::zero(); n];
    for i in (0..n).rev() {
        let mut v = y[i];
        if i + 1 < n {
            v -= l1[i] * x[i + 1];
        }
        if i + 2 < n {
            v -= l2[i] * x[i + 2];
        }
        x[i] = v / l0[i];
    }
    x
}
