//! Held-out evaluation: model inference over full videos, the
//! post-processing pipeline, and per-run metric rows.
//!
//! Pipeline per trace: cumulative sum → smoothness-priors detrend (λ = 10)
//! → split into 360-sample non-overlapping windows (trailing partial window
//! dropped) → zero-phase Butterworth bandpass per window → spectral peak in
//! the 40-150 beats/min band. SNR of the predicted waveform is computed at
//! the reference heart rate. Everything is a pure function of the model and
//! data; subjects are scored in parallel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::federation::FederationError;
use crate::model::{forward, make_difference_frames, ModelParams};
use crate::signal::{
    butterworth_bandpass, cumulative_sum, detrend, estimate_hr, mae, pearson, snr_db,
    BandpassSpec, PpgTrace, SignalError,
};
use crate::synth::{FrameSequence, NoiseTarget, SubjectRecord};

use thiserror::Error;

/// Samples per evaluation window.
pub const EVAL_WINDOW: usize = 360;
/// Detrending strength of the pipeline.
pub const DETREND_LAMBDA: f64 = 10.0;
/// Heart-rate search band in beats/min.
pub const HR_BAND_BPM: (f64, f64) = (40.0, 150.0);
/// Traces longer than this are detrended per window instead of globally.
pub const GLOBAL_DETREND_LIMIT: usize = 2000;

/// Errors from evaluation.
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("trace shorter than one {EVAL_WINDOW}-sample window")]
    TooShortForWindow,
    #[error("prediction and truth lengths differ: {pred} vs {truth}")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("no held-out subjects to score")]
    NoSubjects,
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Federation(#[from] FederationError),
}

/// One scored evaluation window.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalWindow {
    pub pred_hr_bpm: f64,
    pub true_hr_bpm: f64,
    pub snr_db: f64,
    pub window_index: usize,
    pub subject_id: u32,
}

/// Where the reference heart rate per window comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruthSource {
    /// The generator's programmed profile (the default).
    Programmed,
    /// Re-estimated from the reference trace through the same pipeline.
    Reestimated,
}

/// Run the model over a full video: difference frames, then the per-frame
/// forward pass, producing a derivative trace of length T−1 at the video
/// frame rate.
pub fn predict_trace(
    params: &ModelParams<f64>,
    frames: &FrameSequence,
) -> Result<PpgTrace<f64>, EvalError> {
    let inputs: Vec<Vec<f64>> = make_difference_frames(frames);
    let preds = forward(params, &inputs).map_err(FederationError::Model)?;
    PpgTrace::new(preds, frames.fps()).map_err(EvalError::Signal)
}

/// Cumulative sum + detrend, applied globally for traces up to
/// [`GLOBAL_DETREND_LIMIT`] samples and per evaluation window beyond that.
fn to_waveform(trace: &PpgTrace<f64>) -> Result<Vec<f64>, EvalError> {
    let summed = cumulative_sum(trace);
    if summed.len() <= GLOBAL_DETREND_LIMIT {
        Ok(detrend(&summed, DETREND_LAMBDA)?.into_samples())
    } else {
        let samples = summed.into_samples();
        let mut out = Vec::with_capacity(samples.len());
        for chunk in samples.chunks(EVAL_WINDOW) {
            if chunk.len() < 3 {
                out.extend_from_slice(chunk); // tail shorter than a solve; dropped later
                continue;
            }
            let piece = PpgTrace::new(chunk.to_vec(), trace.fs())?;
            out.extend_from_slice(detrend(&piece, DETREND_LAMBDA)?.samples());
        }
        Ok(out)
    }
}

/// Post-process a predicted trace against the reference and score each
/// 360-sample window.
pub fn postprocess_and_score(
    pred: &PpgTrace<f64>,
    truth: &PpgTrace<f64>,
    true_hr: impl Fn(usize) -> f64,
    truth_source: TruthSource,
    subject_id: u32,
) -> Result<Vec<EvalWindow>, EvalError> {
    if pred.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    if pred.len() < EVAL_WINDOW {
        return Err(EvalError::TooShortForWindow);
    }
    let fs = pred.fs();
    let band = BandpassSpec::heart_rate(fs)?;
    let pred_wave = to_waveform(pred)?;
    let truth_wave = to_waveform(truth)?;

    let n_windows = pred.len() / EVAL_WINDOW;
    let mut out = Vec::with_capacity(n_windows);
    for w in 0..n_windows {
        let span = w * EVAL_WINDOW..(w + 1) * EVAL_WINDOW;
        let pred_win = PpgTrace::new(pred_wave[span.clone()].to_vec(), fs)?;
        let truth_win = PpgTrace::new(truth_wave[span.clone()].to_vec(), fs)?;
        let pred_filt = butterworth_bandpass(&pred_win, &band)?;
        let pred_hr = estimate_hr(&pred_filt, HR_BAND_BPM.0, HR_BAND_BPM.1)?;
        let reference_hr = match truth_source {
            TruthSource::Programmed => {
                // Profile value at the window midpoint.
                true_hr(span.start + EVAL_WINDOW / 2)
            }
            TruthSource::Reestimated => {
                let truth_filt = butterworth_bandpass(&truth_win, &band)?;
                estimate_hr(&truth_filt, HR_BAND_BPM.0, HR_BAND_BPM.1)?
            }
        };
        let snr = snr_db(&pred_filt, reference_hr.clamp(40.001, 149.999))?;
        out.push(EvalWindow {
            pred_hr_bpm: pred_hr,
            true_hr_bpm: reference_hr,
            snr_db: snr.db,
            window_index: w,
            subject_id,
        });
    }
    Ok(out)
}

/// Identifies one sweep cell; copied into the metric row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunContext {
    pub noise_target: Option<NoiseTarget>,
    pub noise_level: f64,
    pub policy: String,
    pub seed: u64,
}

/// One (noise level, policy, seed) result row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsRow {
    pub noise_target: Option<NoiseTarget>,
    pub noise_level: f64,
    pub policy: String,
    pub seed: u64,
    pub mae_bpm: f64,
    pub snr_db: f64,
    /// Missing when every HR pair is constant (correlation undefined).
    pub pearson_r: Option<f64>,
    pub n_windows: usize,
}

/// CSV header for metric rows.
pub const METRICS_CSV_HEADER: &str =
    "noise_target,noise_level,policy,seed,mae_bpm,snr_db,pearson_r,n_windows";

impl MetricsRow {
    /// The canonical CSV cells, in header order.
    pub fn csv_fields(&self) -> Vec<String> {
        vec![
            match self.noise_target {
                Some(NoiseTarget::Video) => "video".to_string(),
                Some(NoiseTarget::Label) => "label".to_string(),
                None => "none".to_string(),
            },
            format_float(self.noise_level),
            self.policy.clone(),
            self.seed.to_string(),
            format_float(self.mae_bpm),
            format_float(self.snr_db),
            self.pearson_r.map(format_float).unwrap_or_default(),
            self.n_windows.to_string(),
        ]
    }
}

fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        format!("{v}")
    }
}

/// Evaluate a model on held-out subjects: MAE pooled over every window,
/// mean per-window SNR, and Pearson over pooled (pred, true) HR pairs.
pub fn score_run(
    params: &ModelParams<f64>,
    heldout: &[SubjectRecord],
    truth_source: TruthSource,
    ctx: &RunContext,
) -> Result<MetricsRow, EvalError> {
    if heldout.is_empty() {
        return Err(EvalError::NoSubjects);
    }
    let per_subject: Vec<Result<Vec<EvalWindow>, EvalError>> = heldout
        .par_iter()
        .map(|rec| {
            let pred = predict_trace(params, &rec.frames)?;
            postprocess_and_score(
                &pred,
                &rec.label,
                |i| rec.true_hr_bpm.bpm_at(i),
                truth_source,
                rec.subject_id,
            )
        })
        .collect();

    let mut windows = Vec::new();
    for result in per_subject {
        windows.extend(result?);
    }
    if windows.is_empty() {
        return Err(EvalError::TooShortForWindow);
    }
    windows.sort_by_key(|w| (w.subject_id, w.window_index));

    let preds: Vec<f64> = windows.iter().map(|w| w.pred_hr_bpm).collect();
    let truths: Vec<f64> = windows.iter().map(|w| w.true_hr_bpm).collect();
    let mae_bpm = mae(&preds, &truths)?;
    let snr_mean = windows.iter().map(|w| w.snr_db).sum::<f64>() / windows.len() as f64;
    let pearson_r = match pearson(&preds, &truths) {
        Ok(r) => Some(r),
        // Undefined (constant pairs or a single window) → missing, never
        // fabricated.
        Err(SignalError::ConstantInput) | Err(SignalError::TraceTooShort { .. }) => None,
        Err(e) => return Err(e.into()),
    };

    Ok(MetricsRow {
        noise_target: ctx.noise_target,
        noise_level: ctx.noise_level,
        policy: ctx.policy.clone(),
        seed: ctx.seed,
        mae_bpm,
        snr_db: snr_mean,
        pearson_r,
        n_windows: windows.len(),
    })
}
