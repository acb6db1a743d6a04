//! Clean subject generation: pulse waveform, frames, and labels.

use serde::{Deserialize, Serialize};

use crate::rng::DetRng;
use crate::signal::PpgTrace;

use super::frames::{FrameSequence, CHANNELS};
use super::SynthError;

/// Piecewise-constant heart-rate profile in beats/min, indexed by frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HrProfile {
    /// (start frame, bpm) segments; the first segment starts at 0.
    segments: Vec<(usize, f64)>,
}

impl HrProfile {
    pub fn new(segments: Vec<(usize, f64)>) -> Result<Self, SynthError> {
        if segments.is_empty() || segments[0].0 != 0 {
            return Err(SynthError::InvalidHrProfile);
        }
        if segments.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(SynthError::InvalidHrProfile);
        }
        Ok(Self { segments })
    }

    pub fn constant(bpm: f64) -> Self {
        Self {
            segments: vec![(0, bpm)],
        }
    }

    /// Heart rate at frame `index`.
    pub fn bpm_at(&self, index: usize) -> f64 {
        let mut bpm = self.segments[0].1;
        for &(start, value) in &self.segments {
            if start <= index {
                bpm = value;
            } else {
                break;
            }
        }
        bpm
    }

    pub fn segments(&self) -> &[(usize, f64)] {
        &self.segments
    }
}

/// One client's data: frames, derivative label, programmed heart rate, and
/// the noise levels that were injected (zero for a clean record).
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    pub subject_id: u32,
    pub frames: FrameSequence,
    pub label: PpgTrace<f64>,
    pub true_hr_bpm: HrProfile,
    pub sigma_video: f64,
    pub sigma_label: f64,
}

impl SubjectRecord {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.label.len() != self.frames.t() - 1 {
            return Err(SynthError::LabelLengthMismatch {
                label: self.label.len(),
                frames: self.frames.t(),
            });
        }
        if self.sigma_video < 0.0 {
            return Err(SynthError::NegativeSigma(self.sigma_video));
        }
        if self.sigma_label < 0.0 {
            return Err(SynthError::NegativeSigma(self.sigma_label));
        }
        Ok(())
    }
}

/// Knobs of the clean generator. All values live on the normalized [0, 1]
/// intensity scale.
#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    /// Mean intensity per channel before texture and pulse.
    pub skin_base: [f64; 3],
    /// Peak pulse amplitude before channel weighting.
    pub pulse_amplitude: f64,
    /// Relative pulse strength per channel; green dominates.
    pub channel_weights: [f64; 3],
    /// Half-range of the static per-pixel texture offset.
    pub texture_amplitude: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            skin_base: [0.55, 0.42, 0.38],
            pulse_amplitude: 2.0 / 255.0,
            channel_weights: [0.6, 1.0, 0.4],
            texture_amplitude: 0.04,
        }
    }
}

/// Pulse waveform value at phase `φ` (in cycles): fundamental plus a half-
/// amplitude second harmonic.
pub(crate) fn pulse_wave(phase_cycles: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * phase_cycles;
    w.sin() + 0.5 * (2.0 * w).sin()
}

/// Minimum frames so one 360-sample evaluation window plus a model window
/// always fits.
const MIN_FRAMES: usize = 400;

/// Generate one clean subject with the default generator configuration.
pub fn generate_subject(
    subject_id: u32,
    duration_s: f64,
    fps: f64,
    hw: (usize, usize),
    hr_profile: HrProfile,
    rng_seed: u64,
) -> Result<SubjectRecord, SynthError> {
    generate_subject_with(
        &GeneratorConfig::default(),
        subject_id,
        duration_s,
        fps,
        hw,
        hr_profile,
        rng_seed,
    )
}

/// Generate one clean subject.
///
/// Every pixel carries `skin_base[c] + texture[y,x,c] + α[c]·pulse(t)`; the
/// label is the standardized first difference of the pulse waveform. All
/// stored values are rounded through `f32` so the on-disk format
/// round-trips bit-exactly.
pub fn generate_subject_with(
    config: &GeneratorConfig,
    subject_id: u32,
    duration_s: f64,
    fps: f64,
    hw: (usize, usize),
    hr_profile: HrProfile,
    rng_seed: u64,
) -> Result<SubjectRecord, SynthError> {
    let t = (duration_s * fps).round() as usize;
    if t < MIN_FRAMES {
        return Err(SynthError::DurationTooShort {
            needed: MIN_FRAMES,
            got: t,
        });
    }
    let (h, w) = hw;
    if h == 0 || w == 0 {
        return Err(SynthError::InvalidGeometry { t, h, w });
    }
    let mut rng = DetRng::new(rng_seed);

    // Phase-continuous pulse across heart-rate segments.
    let mut phase = rng.uniform(); // random starting phase, in cycles
    let mut pulse = Vec::with_capacity(t);
    for k in 0..t {
        pulse.push(pulse_wave(phase));
        phase += hr_profile.bpm_at(k) / 60.0 / fps;
    }

    // Static texture per pixel-channel.
    let px = h * w * CHANNELS;
    let texture: Vec<f64> = (0..px)
        .map(|_| rng.uniform_in(-config.texture_amplitude, config.texture_amplitude))
        .collect();

    let alpha = [
        config.pulse_amplitude * config.channel_weights[0],
        config.pulse_amplitude * config.channel_weights[1],
        config.pulse_amplitude * config.channel_weights[2],
    ];

    let mut data = Vec::with_capacity(t * px);
    for &p in &pulse {
        for (i, &tex) in texture.iter().enumerate() {
            let c = i % CHANNELS;
            let v = config.skin_base[c] + tex + alpha[c] * p;
            data.push(v.clamp(0.0, 1.0) as f32);
        }
    }
    let frames = FrameSequence::from_raw(data, t, h, w, fps)?;

    // Standardized pulse derivative, rounded through f32 for the format.
    let mut label: Vec<f64> = pulse.windows(2).map(|p| p[1] - p[0]).collect();
    let n = label.len() as f64;
    let mean = label.iter().sum::<f64>() / n;
    let var = label.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std > 0.0 {
        for v in &mut label {
            *v = (*v - mean) / std;
        }
    } else {
        label.fill(0.0);
    }
    let label: Vec<f64> = label.into_iter().map(|v| v as f32 as f64).collect();
    let label = PpgTrace::new(label, fps).expect("standardized label is valid");

    let record = SubjectRecord {
        subject_id,
        frames,
        label,
        true_hr_bpm: hr_profile,
        sigma_video: 0.0,
        sigma_label: 0.0,
    };
    record.validate()?;
    Ok(record)
}
