//! Model parameters: an ordered list of named dense layers.

use crate::rng::DetRng;
use crate::scalar::Scalar;

use super::ModelError;

/// One dense layer: row-major `rows × cols` weight matrix plus a bias per
/// output row.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<S: Scalar> {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub weight: Vec<S>,
    pub bias: Vec<S>,
}

impl<S: Scalar> LayerParams<S> {
    pub fn zeros(name: &str, rows: usize, cols: usize) -> Self {
        Self {
            name: name.to_string(),
            rows,
            cols,
            weight: vec![S::zero(); rows * cols],
            bias: vec![S::zero(); rows],
        }
    }

    pub fn weight_at(&self, row: usize, col: usize) -> S {
        self.weight[row * self.cols + col]
    }

    /// y = W·x + b
    pub fn affine(&self, x: &[S], out: &mut Vec<S>) {
        out.clear();
        for r in 0..self.rows {
            let row = &self.weight[r * self.cols..(r + 1) * self.cols];
            let mut acc = self.bias[r];
            for (w, xi) in row.iter().zip(x) {
                acc += *w * *xi;
            }
            out.push(acc);
        }
    }
}

/// Ordered layer stack exchanged between clients and server.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<S: Scalar> {
    pub layers: Vec<LayerParams<S>>,
}

/// Gradients, shape-congruent with the parameters they differentiate.
pub type GradientSet<S> = ModelParams<S>;

impl<S: Scalar> ModelParams<S> {
    /// Two-layer perceptron: `input_dim → hidden_dim (tanh) → 1`, weights
    /// seeded uniform in ±√(6 / (fan_in + fan_out)), biases zero.
    pub fn init_two_layer(input_dim: usize, hidden_dim: usize, seed: u64) -> Self {
        let mut rng = DetRng::new(seed);
        let mut glorot = |name: &str, rows: usize, cols: usize| {
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            let weight: Vec<S> = (0..rows * cols)
                .map(|_| S::from_f64_c(rng.uniform_in(-limit, limit)))
                .collect();
            LayerParams {
                name: name.to_string(),
                rows,
                cols,
                weight,
                bias: vec![S::zero(); rows],
            }
        };
        let hidden = glorot("hidden", hidden_dim, input_dim);
        let output = glorot("output", 1, hidden_dim);
        Self {
            layers: vec![hidden, output],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams::zeros(&l.name, l.rows, l.cols))
                .collect(),
        }
    }

    /// Dimension of the input the first layer expects.
    pub fn input_dim(&self) -> usize {
        self.layers.first().map(|l| l.cols).unwrap_or(0)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// All parameter values in a fixed order (layer, weights, bias).
    pub fn flatten(&self) -> Vec<S> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weight);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Mutable view of the k-th parameter in `flatten` order.
    pub fn param_mut(&mut self, mut index: usize) -> &mut S {
        for l in &mut self.layers {
            if index < l.weight.len() {
                return &mut l.weight[index];
            }
            index -= l.weight.len();
            if index < l.bias.len() {
                return &mut l.bias[index];
            }
            index -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    /// Check the other set has identical layer names and shapes.
    pub fn congruent_with(&self, other: &Self) -> Result<(), ModelError> {
        if self.layers.len() != other.layers.len() {
            return Err(ModelError::ShapeMismatch {
                layer: "<stack>".into(),
                detail: format!("{} vs {} layers", self.layers.len(), other.layers.len()),
            });
        }
        for (a, b) in self.layers.iter().zip(&other.layers) {
            if a.name != b.name || a.rows != b.rows || a.cols != b.cols {
                return Err(ModelError::ShapeMismatch {
                    layer: a.name.clone(),
                    detail: format!(
                        "{}x{} `{}` vs {}x{} `{}`",
                        a.rows, a.cols, a.name, b.rows, b.cols, b.name
                    ),
                });
            }
        }
        Ok(())
    }
}
