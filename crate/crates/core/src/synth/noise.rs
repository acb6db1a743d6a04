//! Per-subject noise levels and Gaussian corruption of frames and labels.

use serde::{Deserialize, Serialize};

use crate::rng::DetRng;
use crate::signal::PpgTrace;

use super::frames::FrameSequence;

/// Which side of the data an experiment corrupts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseTarget {
    Video,
    Label,
}

/// Experiment-level noise description: per-subject levels are drawn from
/// `Normal(experiment_level, subject_std)` and clamped at zero.
#[derive(Debug, Clone)]
pub struct NoiseConfig {
    pub experiment_level: f64,
    pub subject_std: f64,
    pub target: NoiseTarget,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn new(experiment_level: f64, target: NoiseTarget, seed: u64) -> Self {
        Self {
            experiment_level,
            subject_std: 0.1,
            target,
            seed,
        }
    }
}

/// Draw one noise level per subject: `max(0, Normal(level, std))`.
pub fn sample_subject_noise(config: &NoiseConfig, n_subjects: usize) -> Vec<f64> {
    let mut rng = DetRng::new(config.seed);
    (0..n_subjects)
        .map(|_| {
            rng.normal_scaled(config.experiment_level, config.subject_std)
                .max(0.0)
        })
        .collect()
}

/// Add `Normal(0, sigma)` to every pixel-channel value independently, then
/// clamp back to [0, 1]. `sigma` is on the normalized intensity scale.
pub fn add_video_noise(frames: &FrameSequence, sigma: f64, rng_seed: u64) -> FrameSequence {
    if sigma == 0.0 {
        return frames.clone();
    }
    let mut rng = DetRng::new(rng_seed);
    let mut out = frames.clone();
    for v in out.data_mut() {
        let noisy = (*v as f64 + sigma * rng.normal()).clamp(0.0, 1.0);
        *v = noisy as f32;
    }
    out
}

/// Add `Normal(0, sigma)` to every label sample. No clamping: labels are
/// standardized, not intensities.
pub fn add_label_noise(label: &PpgTrace<f64>, sigma: f64, rng_seed: u64) -> PpgTrace<f64> {
    if sigma == 0.0 {
        return label.clone();
    }
    let mut rng = DetRng::new(rng_seed);
    let samples: Vec<f64> = label
        .samples()
        .iter()
        .map(|&v| v + sigma * rng.normal())
        .collect();
    PpgTrace::new(samples, label.fs()).expect("noisy label stays finite")
}
