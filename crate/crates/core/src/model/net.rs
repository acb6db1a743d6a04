//! Difference-frame preprocessing, forward pass, and backpropagation.

use crate::scalar::Scalar;
use crate::synth::FrameSequence;

use super::params::{GradientSet, ModelParams};
use super::ModelError;

/// Frames per training window.
pub const WINDOW_FRAMES: usize = 20;

/// Division guard for the frame-ratio normalization.
const DIFF_EPS: f64 = 1e-7;

/// One window of flattened difference-frame inputs and per-frame targets.
#[derive(Debug, Clone)]
pub struct TrainingWindow<S: Scalar> {
    pub inputs: Vec<Vec<S>>,
    pub targets: Vec<S>,
}

impl<S: Scalar> TrainingWindow<S> {
    pub fn new(inputs: Vec<Vec<S>>, targets: Vec<S>) -> Result<Self, ModelError> {
        if inputs.len() != targets.len() {
            return Err(ModelError::WindowLengthMismatch {
                inputs: inputs.len(),
                targets: targets.len(),
            });
        }
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Normalized difference frames, flattened per frame.
///
/// `d(t) = (I(t+1) − I(t)) / (I(t+1) + I(t) + ε)` pixelwise, then every
/// frame is divided by the standard deviation of the whole difference
/// sequence. Output has length `T − 1`. A brightness rescale of the video
/// cancels in the ratio, and an all-static video yields all zeros.
pub fn make_difference_frames<S: Scalar>(frames: &FrameSequence) -> Vec<Vec<S>> {
    let t = frames.t();
    let px = frames.frame_len();
    let mut diffs: Vec<Vec<f64>> = Vec::with_capacity(t - 1);
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    for k in 0..t - 1 {
        let cur = frames.frame(k);
        let next = frames.frame(k + 1);
        let mut d = Vec::with_capacity(px);
        for (&a, &b) in cur.iter().zip(next) {
            let (a, b) = (a as f64, b as f64);
            let v = (b - a) / (b + a + DIFF_EPS);
            sum += v;
            sum_sq += v * v;
            d.push(v);
        }
        diffs.push(d);
    }
    let n = ((t - 1) * px) as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    let std = var.sqrt();
    let scale = if std > 0.0 { 1.0 / std } else { 1.0 };
    diffs
        .into_iter()
        .map(|d| d.into_iter().map(|v| S::from_f64_c(v * scale)).collect())
        .collect()
}

/// Forward pass over one window: each frame independently through the layer
/// stack, tanh between layers, linear output.
pub fn forward<S: Scalar>(
    params: &ModelParams<S>,
    inputs: &[Vec<S>],
) -> Result<Vec<S>, ModelError> {
    let mut out = Vec::with_capacity(inputs.len());
    let mut buf_a = Vec::new();
    let mut buf_b = Vec::new();
    for x in inputs {
        out.push(forward_one(params, x, &mut buf_a, &mut buf_b)?);
    }
    Ok(out)
}

fn forward_one<S: Scalar>(
    params: &ModelParams<S>,
    x: &[S],
    buf_a: &mut Vec<S>,
    buf_b: &mut Vec<S>,
) -> Result<S, ModelError> {
    if x.len() != params.input_dim() {
        return Err(ModelError::InputDimMismatch {
            got: x.len(),
            expected: params.input_dim(),
        });
    }
    let last = params.layers.len() - 1;
    buf_a.clear();
    buf_a.extend_from_slice(x);
    for (i, layer) in params.layers.iter().enumerate() {
        if layer.cols != buf_a.len() {
            return Err(ModelError::ShapeMismatch {
                layer: layer.name.clone(),
                detail: format!("expects {} inputs, got {}", layer.cols, buf_a.len()),
            });
        }
        layer.affine(buf_a, buf_b);
        if i != last {
            for v in buf_b.iter_mut() {
                *v = v.tanh();
            }
        }
        std::mem::swap(buf_a, buf_b);
    }
    Ok(buf_a[0])
}

/// Mean-squared-error loss over the window and its gradients via
/// backpropagation.
pub fn loss_and_grad<S: Scalar>(
    params: &ModelParams<S>,
    window: &TrainingWindow<S>,
) -> Result<(S, GradientSet<S>), ModelError> {
    let n_layers = params.layers.len();
    let mut grads = params.zeros_like();
    let mut loss = S::zero();
    let inv_frames = S::from_f64_c(1.0 / window.len() as f64);
    let two = S::from_f64_c(2.0);

    // Per-layer activations, reused across frames.
    let mut acts: Vec<Vec<S>> = vec![Vec::new(); n_layers + 1];
    for (x, &y) in window.inputs.iter().zip(&window.targets) {
        if x.len() != params.input_dim() {
            return Err(ModelError::InputDimMismatch {
                got: x.len(),
                expected: params.input_dim(),
            });
        }
        acts[0].clear();
        acts[0].extend_from_slice(x);
        for (i, layer) in params.layers.iter().enumerate() {
            if layer.cols != acts[i].len() {
                return Err(ModelError::ShapeMismatch {
                    layer: layer.name.clone(),
                    detail: format!("expects {} inputs, got {}", layer.cols, acts[i].len()),
                });
            }
            let (head, tail) = acts.split_at_mut(i + 1);
            layer.affine(&head[i], &mut tail[0]);
            if i != n_layers - 1 {
                for v in tail[0].iter_mut() {
                    *v = v.tanh();
                }
            }
        }
        let pred = acts[n_layers][0];
        let err = pred - y;
        loss += err * err * inv_frames;

        // Backward: delta over the current layer's outputs.
        let mut delta = vec![two * err * inv_frames];
        for i in (0..n_layers).rev() {
            let layer = &params.layers[i];
            let input = &acts[i];
            let g = &mut grads.layers[i];
            for (r, &dr) in delta.iter().enumerate() {
                g.bias[r] += dr;
                let row = &mut g.weight[r * layer.cols..(r + 1) * layer.cols];
                for (w, &xi) in row.iter_mut().zip(input) {
                    *w += dr * xi;
                }
            }
            if i > 0 {
                // Propagate through the affine and the tanh below it.
                let mut next = vec![S::zero(); layer.cols];
                for (r, &dr) in delta.iter().enumerate() {
                    let row = &layer.weight[r * layer.cols..(r + 1) * layer.cols];
                    for (nv, &w) in next.iter_mut().zip(row) {
                        *nv += dr * w;
                    }
                }
                for (nv, &a) in next.iter_mut().zip(input.iter()) {
                    *nv *= S::one() - a * a;
                }
                delta = next;
            }
        }
    }
    if !loss.is_finite() || !grads.all_finite() {
        return Err(ModelError::NumericalOverflow);
    }
    Ok((loss, grads))
}
