//! Adam optimizer with bias correction.

use crate::scalar::Scalar;

use super::params::{GradientSet, ModelParams};
use super::ModelError;

/// First/second-moment accumulators plus the step counter.
#[derive(Debug, Clone)]
pub struct OptimizerState<S: Scalar> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    m: Vec<S>,
    v: Vec<S>,
}

impl<S: Scalar> OptimizerState<S> {
    /// Fresh state for `params` with the standard defaults
    /// (lr 0.001, β₁ 0.9, β₂ 0.999, ε 1e-8).
    pub fn new(params: &ModelParams<S>) -> Self {
        Self::with_lr(params, 1e-3)
    }

    pub fn with_lr(params: &ModelParams<S>, lr: f64) -> Self {
        let n = params.param_count();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: vec![S::zero(); n],
            v: vec![S::zero(); n],
        }
    }
}

/// One Adam update. Returns the updated parameters; the state is advanced
/// in place.
pub fn adam_step<S: Scalar>(
    params: &ModelParams<S>,
    grads: &GradientSet<S>,
    state: &mut OptimizerState<S>,
) -> Result<ModelParams<S>, ModelError> {
    params.congruent_with(grads)?;
    state.step += 1;
    let b1 = S::from_f64_c(state.beta1);
    let b2 = S::from_f64_c(state.beta2);
    let one = S::one();
    let lr = S::from_f64_c(state.lr);
    let eps = S::from_f64_c(state.epsilon);
    let corr1 = S::from_f64_c(1.0 - state.beta1.powi(state.step as i32));
    let corr2 = S::from_f64_c(1.0 - state.beta2.powi(state.step as i32));

    let mut out = params.clone();
    let mut k = 0usize;
    for (layer, glayer) in out.layers.iter_mut().zip(&grads.layers) {
        for (p, &g) in layer
            .weight
            .iter_mut()
            .chain(layer.bias.iter_mut())
            .zip(glayer.weight.iter().chain(glayer.bias.iter()))
        {
            let m = b1 * state.m[k] + (one - b1) * g;
            let v = b2 * state.v[k] + (one - b2) * g * g;
            state.m[k] = m;
            state.v[k] = v;
            let m_hat = m / corr1;
            let v_hat = v / corr2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
            k += 1;
        }
    }
    Ok(out)
}
