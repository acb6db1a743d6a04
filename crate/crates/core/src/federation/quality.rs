//! Signal-quality scores derived from per-client noise levels.
//!
//! Noise levels are first normalized across the cohort (min-max to [0, 1]),
//! then mapped to a raw quality score. The normalization makes the score
//! scale-free: the cleanest client of a round is treated the same whether
//! the experiment level is 0.25 or 1.5.

use serde::{Deserialize, Serialize};

/// Regularizer keeping inverse and max-minus scores finite and positive.
pub const QUALITY_EPSILON: f64 = 0.05;

/// How a cohort-normalized noise level σ ∈ [0, 1] becomes a raw quality.
///
/// The default inverse map rewards clean clients. `MaxMinus` is a linear
/// alternative and `Literal` assigns σ itself as the score (up-weighting
/// noisy clients), kept selectable so the effect of each reading can be
/// measured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QualityMap {
    /// raw = 1 / (σ + ε)
    #[default]
    Inverse,
    /// raw = (1 − σ) + ε
    MaxMinus,
    /// raw = σ
    Literal,
}

impl std::str::FromStr for QualityMap {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "inverse" => Ok(QualityMap::Inverse),
            "maxminus" => Ok(QualityMap::MaxMinus),
            "literal" => Ok(QualityMap::Literal),
            other => Err(format!("unknown quality map `{other}`")),
        }
    }
}

impl QualityMap {
    pub fn name(&self) -> &'static str {
        match self {
            QualityMap::Inverse => "inverse",
            QualityMap::MaxMinus => "maxminus",
            QualityMap::Literal => "literal",
        }
    }
}

/// Cohort bounds used to normalize per-client noise levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaBounds {
    pub min: f64,
    pub max: f64,
}

impl SigmaBounds {
    /// Bounds of a cohort's noise levels. An empty cohort degenerates to
    /// (0, 0).
    pub fn from_cohort(sigmas: impl IntoIterator<Item = f64>) -> Self {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut any = false;
        for s in sigmas {
            min = min.min(s);
            max = max.max(s);
            any = true;
        }
        if !any {
            return Self { min: 0.0, max: 0.0 };
        }
        Self { min, max }
    }

    /// Min-max normalize one level into [0, 1]. A cohort with no spread
    /// (all clients equally noisy) normalizes to 0 for everyone, so every
    /// quality map degenerates to uniform weights after λ-normalization.
    pub fn normalize(&self, sigma_s: f64) -> f64 {
        let range = self.max - self.min;
        if range <= 0.0 {
            return 0.0;
        }
        ((sigma_s - self.min) / range).clamp(0.0, 1.0)
    }
}

/// Raw (unnormalized) quality for a client whose cohort-normalized noise
/// level is `sigma_norm` ∈ [0, 1].
pub fn compute_quality(sigma_norm: f64, map: QualityMap) -> f64 {
    debug_assert!((0.0..=1.0).contains(&sigma_norm));
    match map {
        QualityMap::Inverse => 1.0 / (sigma_norm + QUALITY_EPSILON),
        QualityMap::MaxMinus => (1.0 - sigma_norm).max(0.0) + QUALITY_EPSILON,
        QualityMap::Literal => sigma_norm,
    }
}

/// Normalize raw qualities to sum to one over a round's participants.
///
/// If every raw score is zero (e.g. the literal map on all-clean clients),
/// falls back to uniform weights: aggregation must stay a convex
/// combination.
pub fn normalize_qualities(raw: &[f64]) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return vec![1.0 / raw.len() as f64; raw.len()];
    }
    raw.iter().map(|&q| q / total).collect()
}
