//! Experiment configuration: a flat key-value file with dotted sections,
//! every key overridable from the command line.
//!
//! Grammar: one `key = value` per line; `#` starts a comment; blank lines
//! ignored. Lists are comma-separated. Unknown keys are errors.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use fedppg_core::federation::{AggregationPolicy, LocalSteps, QualityMap};
use fedppg_core::synth::NoiseTarget;

/// Paper-style video noise grid.
pub const VIDEO_LEVELS: &[f64] = &[0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5];
/// Paper-style label noise grid.
pub const LABEL_LEVELS: &[f64] = &[0.0, 1.5, 2.5, 3.5, 4.5];

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    /// Master seed; every stream (dataset, cells, federation) derives from it.
    pub seed: u64,
    pub dataset: DatasetConfig,
    pub noise: NoiseGridConfig,
    pub federation: FederationConfig,
    pub run: RunConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetConfig {
    pub subjects: usize,
    pub duration_s: f64,
    pub fps: f64,
    pub height: usize,
    pub width: usize,
    pub hr_min_bpm: f64,
    pub hr_max_bpm: f64,
    /// Scene brightness: scales the per-channel skin base intensity.
    pub brightness: f64,
    pub pulse_amplitude: f64,
    pub texture_amplitude: f64,
    /// Scale from an 8-bit-style noise level to a normalized intensity sigma.
    pub video_noise_unit: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NoiseGridConfig {
    pub target: NoiseTarget,
    /// None → the standard grid for the chosen target.
    pub levels: Option<Vec<f64>>,
    pub subject_std: f64,
    /// Camera sensor-noise floor on the normalized intensity scale, applied
    /// to every video (training and held-out) before any experiment noise.
    pub base_sigma: f64,
    /// Extra sensor noise on held-out videos only; `None` means the base
    /// floor alone (matched conditions).
    pub eval_sigma: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FederationConfig {
    pub rounds: u64,
    pub client_fraction: f64,
    pub local_steps: LocalSteps,
    pub quality_map: QualityMap,
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub weight_by_samples: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub policies: Vec<AggregationPolicy>,
    pub repeats: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            dataset: DatasetConfig {
                subjects: 25,
                duration_s: 60.0,
                fps: 30.0,
                height: 8,
                width: 8,
                hr_min_bpm: 85.0,
                hr_max_bpm: 135.0,
                brightness: 1.0,
                pulse_amplitude: 2.0 / 255.0,
                texture_amplitude: 0.04,
                video_noise_unit: 36.0 * fedppg_core::synth::VIDEO_NOISE_UNIT,
            },
            noise: NoiseGridConfig {
                target: NoiseTarget::Video,
                levels: None,
                subject_std: 0.1,
                base_sigma: 15.0 / 255.0,
                eval_sigma: None,
            },
            federation: FederationConfig {
                rounds: 7,
                client_fraction: 1.0,
                local_steps: LocalSteps::OnePass,
                quality_map: QualityMap::Inverse,
                hidden_dim: 16,
                learning_rate: 1e-3,
                weight_by_samples: false,
            },
            run: RunConfig {
                policies: vec![AggregationPolicy::FedAvg, AggregationPolicy::FedWeight],
                repeats: 5,
            },
        }
    }
}

impl ExperimentConfig {
    /// Noise levels to sweep: the configured list, or the standard grid for
    /// the target.
    pub fn levels(&self) -> Vec<f64> {
        match &self.noise.levels {
            Some(v) => v.clone(),
            None => match self.noise.target {
                NoiseTarget::Video => VIDEO_LEVELS.to_vec(),
                NoiseTarget::Label => LABEL_LEVELS.to_vec(),
            },
        }
    }

    /// Parse a config file and apply it over the defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected `key = value`", path.display(), lineno + 1))?;
            config
                .set(key.trim(), value.trim())
                .with_context(|| format!("{}:{}", path.display(), lineno + 1))?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Apply one `key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse(key, value)?,
            "dataset.subjects" => self.dataset.subjects = parse(key, value)?,
            "dataset.duration-s" => self.dataset.duration_s = parse(key, value)?,
            "dataset.fps" => self.dataset.fps = parse(key, value)?,
            "dataset.height" => self.dataset.height = parse(key, value)?,
            "dataset.width" => self.dataset.width = parse(key, value)?,
            "dataset.hr-min-bpm" => self.dataset.hr_min_bpm = parse(key, value)?,
            "dataset.hr-max-bpm" => self.dataset.hr_max_bpm = parse(key, value)?,
            "dataset.brightness" => self.dataset.brightness = parse(key, value)?,
            "dataset.pulse-amplitude" => self.dataset.pulse_amplitude = parse(key, value)?,
            "dataset.texture-amplitude" => self.dataset.texture_amplitude = parse(key, value)?,
            "dataset.video-noise-unit" => self.dataset.video_noise_unit = parse(key, value)?,
            "noise.target" => {
                self.noise.target = match value {
                    "video" => NoiseTarget::Video,
                    "label" => NoiseTarget::Label,
                    other => bail!("noise.target must be video|label, got `{other}`"),
                }
            }
            "noise.levels" => self.noise.levels = Some(parse_list(key, value)?),
            "noise.subject-std" => self.noise.subject_std = parse(key, value)?,
            "noise.base-sigma" => self.noise.base_sigma = parse(key, value)?,
            "noise.eval-sigma" => self.noise.eval_sigma = Some(parse(key, value)?),
            "federation.rounds" => self.federation.rounds = parse(key, value)?,
            "federation.client-fraction" => self.federation.client_fraction = parse(key, value)?,
            "federation.local-steps" => {
                self.federation.local_steps = if value == "one-pass" {
                    LocalSteps::OnePass
                } else {
                    LocalSteps::Steps(parse(key, value)?)
                }
            }
            "federation.quality-map" => {
                self.federation.quality_map = value.parse::<QualityMap>().map_err(|e| anyhow!(e))?
            }
            "federation.hidden-dim" => self.federation.hidden_dim = parse(key, value)?,
            "federation.learning-rate" => self.federation.learning_rate = parse(key, value)?,
            "federation.weight-by-samples" => {
                self.federation.weight_by_samples = parse(key, value)?
            }
            "run.policies" => {
                let mut policies = Vec::new();
                for part in value.split(',') {
                    policies.push(
                        part.trim()
                            .parse::<AggregationPolicy>()
                            .map_err(|e| anyhow!(e))?,
                    );
                }
                if policies.is_empty() {
                    bail!("run.policies must not be empty");
                }
                self.run.policies = policies;
            }
            "run.repeats" => self.run.repeats = parse(key, value)?,
            other => bail!("unknown config key `{other}`"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset.subjects < 2 {
            bail!("dataset.subjects must be at least 2 (train + eval split)");
        }
        if self.dataset.height == 0 || self.dataset.width == 0 {
            bail!("dataset frame size must be positive");
        }
        if self.dataset.fps.is_nan() || self.dataset.fps <= 0.0 {
            bail!("dataset.fps must be positive");
        }
        if !(self.dataset.brightness > 0.0 && self.dataset.brightness <= 1.5) {
            bail!("dataset.brightness must be in (0, 1.5]");
        }
        if self.dataset.duration_s * self.dataset.fps < 400.0 {
            bail!(
                "dataset.duration-s too short: need ≥ 400 frames, got {}",
                (self.dataset.duration_s * self.dataset.fps) as usize
            );
        }
        if !(self.dataset.hr_min_bpm < self.dataset.hr_max_bpm
            && self.dataset.hr_min_bpm >= 40.0
            && self.dataset.hr_max_bpm <= 150.0)
        {
            bail!("dataset HR range must satisfy 40 ≤ min < max ≤ 150");
        }
        if self.levels().is_empty() {
            bail!("noise.levels must not be empty");
        }
        if self.levels().iter().any(|&l| l < 0.0) {
            bail!("noise levels must be nonnegative");
        }
        if self.run.repeats == 0 {
            bail!("run.repeats must be at least 1");
        }
        if !(self.federation.client_fraction > 0.0 && self.federation.client_fraction <= 1.0) {
            bail!("federation.client-fraction must be in (0, 1]");
        }
        Ok(())
    }

    /// Echo of every key, for the manifest.
    pub fn as_key_values(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        map.insert("seed".into(), self.seed.to_string());
        map.insert("dataset.subjects".into(), self.dataset.subjects.to_string());
        map.insert("dataset.duration-s".into(), self.dataset.duration_s.to_string());
        map.insert("dataset.fps".into(), self.dataset.fps.to_string());
        map.insert("dataset.height".into(), self.dataset.height.to_string());
        map.insert("dataset.width".into(), self.dataset.width.to_string());
        map.insert("dataset.hr-min-bpm".into(), self.dataset.hr_min_bpm.to_string());
        map.insert("dataset.hr-max-bpm".into(), self.dataset.hr_max_bpm.to_string());
        map.insert("dataset.brightness".into(), self.dataset.brightness.to_string());
        map.insert(
            "dataset.pulse-amplitude".into(),
            self.dataset.pulse_amplitude.to_string(),
        );
        map.insert(
            "dataset.texture-amplitude".into(),
            self.dataset.texture_amplitude.to_string(),
        );
        map.insert(
            "dataset.video-noise-unit".into(),
            self.dataset.video_noise_unit.to_string(),
        );
        map.insert(
            "noise.target".into(),
            match self.noise.target {
                NoiseTarget::Video => "video".into(),
                NoiseTarget::Label => "label".into(),
            },
        );
        map.insert(
            "noise.levels".into(),
            self.levels()
                .iter()
                .map(|l| l.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        map.insert("noise.subject-std".into(), self.noise.subject_std.to_string());
        map.insert("noise.base-sigma".into(), self.noise.base_sigma.to_string());
        map.insert(
            "noise.eval-sigma".into(),
            self.noise
                .eval_sigma
                .map(|v| v.to_string())
                .unwrap_or_else(|| "base".into()),
        );
        map.insert("federation.rounds".into(), self.federation.rounds.to_string());
        map.insert(
            "federation.client-fraction".into(),
            self.federation.client_fraction.to_string(),
        );
        map.insert(
            "federation.local-steps".into(),
            match self.federation.local_steps {
                LocalSteps::OnePass => "one-pass".into(),
                LocalSteps::Steps(n) => n.to_string(),
            },
        );
        map.insert(
            "federation.quality-map".into(),
            self.federation.quality_map.name().into(),
        );
        map.insert(
            "federation.hidden-dim".into(),
            self.federation.hidden_dim.to_string(),
        );
        map.insert(
            "federation.learning-rate".into(),
            self.federation.learning_rate.to_string(),
        );
        map.insert(
            "federation.weight-by-samples".into(),
            self.federation.weight_by_samples.to_string(),
        );
        map.insert(
            "run.policies".into(),
            self.run
                .policies
                .iter()
                .map(|p| p.name().to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        map.insert("run.repeats".into(), self.run.repeats.to_string());
        map
    }
}

pub fn parse_quality_map(value: &str) -> Result<QualityMap> {
    value.parse::<QualityMap>().map_err(|e| anyhow!(e))
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| anyhow!("key `{key}`: cannot parse `{value}`: {e}"))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|part| parse::<f64>(key, part.trim()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn set_and_levels_roundtrip() {
        let mut c = ExperimentConfig::default();
        c.set("noise.levels", "0, 0.5, 1.5").unwrap();
        assert_eq!(c.levels(), vec![0.0, 0.5, 1.5]);
        c.set("noise.target", "label").unwrap();
        c.set("run.policies", "fedweight").unwrap();
        assert_eq!(c.run.policies, vec![AggregationPolicy::FedWeight]);
        assert!(c.set("bogus.key", "1").is_err());
        assert!(c.set("noise.target", "audio").is_err());
    }

    #[test]
    fn label_target_defaults_to_label_grid() {
        let mut c = ExperimentConfig::default();
        c.set("noise.target", "label").unwrap();
        assert_eq!(c.levels(), LABEL_LEVELS.to_vec());
    }

    #[test]
    fn config_file_parsing() {
        let dir = std::env::temp_dir().join(format!("fedppg-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("exp.conf");
        std::fs::write(
            &path,
            "# comment\nseed = 99\ndataset.subjects = 6\nrun.repeats = 2 # trailing\n",
        )
        .unwrap();
        let c = ExperimentConfig::from_file(&path).unwrap();
        assert_eq!(c.seed, 99);
        assert_eq!(c.dataset.subjects, 6);
        assert_eq!(c.run.repeats, 2);
        std::fs::remove_dir_all(&dir).unwrap();

        let dir2 = std::env::temp_dir().join(format!("fedppg-cfg2-{}", std::process::id()));
        std::fs::create_dir_all(&dir2).unwrap();
        let bad = dir2.join("bad.conf");
        std::fs::write(&bad, "dataset.subjects 6\n").unwrap();
        let err = ExperimentConfig::from_file(&bad).unwrap_err();
        assert!(err.to_string().contains(":1"), "{err}");
        std::fs::remove_dir_all(&dir2).unwrap();
    }

    #[test]
    fn invalid_frame_size_rejected_before_any_work() {
        let mut c = ExperimentConfig::default();
        c.set("dataset.height", "0").unwrap();
        assert!(c.validate().is_err());
    }
}
