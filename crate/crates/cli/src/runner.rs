//! Dataset generation and the sweep executor.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde_json::json;

use fedppg_core::evaluation::{score_run, MetricsRow, RunContext, TruthSource, METRICS_CSV_HEADER};
use fedppg_core::federation::{run_federation, RoundConfig};
use fedppg_core::rng::{derive_seed, DetRng};
use fedppg_core::synth::{
    add_label_noise, add_video_noise, generate_subject_with, sample_subject_noise, write_dataset,
    GeneratorConfig, HrProfile, NoiseConfig, NoiseTarget, SubjectRecord,
};

use crate::config::ExperimentConfig;

/// Stream labels for seed derivation; distinct per purpose so streams never
/// collide.
const STREAM_DATASET: u64 = 0x01;
const STREAM_SIGMA: u64 = 0x02;
const STREAM_FEDERATION: u64 = 0x03;
const STREAM_HR_PROFILE: u64 = 0x04;
const STREAM_TRAIN_NOISE: u64 = 0x1000;
const STREAM_EVAL_NOISE: u64 = 0x2000;
const STREAM_BASE_NOISE: u64 = 0x3000;

/// Generate the clean base dataset for a configuration.
///
/// Per-subject heart rates are drawn uniformly from the configured range;
/// odd-numbered subjects get one mid-recording step change so the
/// piecewise-constant profile machinery sees real use.
pub fn build_base_dataset(config: &ExperimentConfig) -> Result<Vec<SubjectRecord>> {
    let d = &config.dataset;
    let mut gen_cfg = GeneratorConfig {
        pulse_amplitude: d.pulse_amplitude,
        texture_amplitude: d.texture_amplitude,
        ..GeneratorConfig::default()
    };
    for c in &mut gen_cfg.skin_base {
        *c *= d.brightness;
    }
    let dataset_seed = derive_seed(config.seed, STREAM_DATASET);
    let total_frames = (d.duration_s * d.fps).round() as usize;

    let specs: Vec<(u32, HrProfile, u64)> = (0..d.subjects)
        .map(|i| {
            let subject_seed = derive_seed(dataset_seed, i as u64);
            let mut rng = DetRng::new(derive_seed(subject_seed, STREAM_HR_PROFILE));
            let base_hr = rng.uniform_in(d.hr_min_bpm, d.hr_max_bpm);
            let profile = if i % 2 == 1 {
                let delta = if rng.uniform() < 0.5 { 8.0 } else { -8.0 };
                let second = (base_hr + delta).clamp(d.hr_min_bpm, d.hr_max_bpm);
                HrProfile::new(vec![(0, base_hr), (total_frames / 2, second)])
                    .expect("valid two-segment profile")
            } else {
                HrProfile::constant(base_hr)
            };
            (i as u32, profile, subject_seed)
        })
        .collect();

    let mut records = specs
        .into_par_iter()
        .map(|(id, profile, seed)| {
            generate_subject_with(
                &gen_cfg,
                id,
                d.duration_s,
                d.fps,
                (d.height, d.width),
                profile,
                seed,
            )
            .map_err(|e| anyhow::anyhow!("subject {id}: {e}"))
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by_key(|r| r.subject_id);
    Ok(records)
}

/// `generate` subcommand: write the base dataset plus a manifest.
pub fn cmd_generate(config: &ExperimentConfig, out_dir: &Path) -> Result<PathBuf> {
    config.validate()?;
    let dataset_dir = out_dir.join("dataset");
    let records = build_base_dataset(config)?;
    write_dataset(&records, &dataset_dir)
        .with_context(|| format!("writing dataset to {}", dataset_dir.display()))?;
    write_manifest(config, out_dir, Some(&dataset_dir))?;
    Ok(dataset_dir)
}

fn write_manifest(
    config: &ExperimentConfig,
    out_dir: &Path,
    dataset_dir: Option<&Path>,
) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = json!({
        "config": config.as_key_values(),
        "timestamp_unix": timestamp,
        "dataset_dir": dataset_dir.map(|p| p.display().to_string()),
    });
    let path = out_dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// 80/20 split by subject order: the first ⌈4n/5⌉ subjects train, the rest
/// are held out.
pub fn split_train_eval(records: &[SubjectRecord]) -> (Vec<SubjectRecord>, Vec<SubjectRecord>) {
    let n_train = (records.len() * 4).div_ceil(5);
    let n_train = n_train.clamp(1, records.len() - 1);
    (
        records[..n_train].to_vec(),
        records[n_train..].to_vec(),
    )
}

/// One sweep cell, fully determined by (config, level, policy, repeat).
///
/// The cell seed is independent of the aggregation policy, so FedAvg and
/// FedWeight runs with the same repeat share subject noise levels, noise
/// draws, model initialization, and client selection.
pub struct CellOutcome {
    pub row: MetricsRow,
    pub history_jsonl: String,
}

pub fn run_cell(
    config: &ExperimentConfig,
    base: &[SubjectRecord],
    level: f64,
    policy: fedppg_core::federation::AggregationPolicy,
    repeat: usize,
) -> Result<CellOutcome> {
    let cell_seed = cell_seed(config, level, repeat);
    let (mut train, mut eval) = split_train_eval(base);

    // Per-subject noise levels; level 0 is the clean baseline with no
    // subject noise protocol at all.
    let sigmas: Vec<f64> = if level == 0.0 {
        vec![0.0; train.len()]
    } else {
        let noise_cfg = NoiseConfig {
            experiment_level: level,
            subject_std: config.noise.subject_std,
            target: config.noise.target,
            seed: derive_seed(cell_seed, STREAM_SIGMA),
        };
        sample_subject_noise(&noise_cfg, train.len())
    };

    // Camera sensor-noise floor, identical across policies for a repeat.
    // Held-out videos can carry their own floor to model a harder target
    // sensor.
    let base_sigma = config.noise.base_sigma;
    let eval_sigma = config.noise.eval_sigma.unwrap_or(base_sigma);
    if base_sigma > 0.0 {
        train.par_iter_mut().enumerate().for_each(|(i, rec)| {
            let seed = derive_seed(cell_seed, STREAM_BASE_NOISE + i as u64);
            rec.frames = add_video_noise(&rec.frames, base_sigma, seed);
        });
    }
    if eval_sigma > 0.0 {
        eval.par_iter_mut().enumerate().for_each(|(i, rec)| {
            let seed = derive_seed(cell_seed, STREAM_EVAL_NOISE + i as u64);
            rec.frames = add_video_noise(&rec.frames, eval_sigma, seed);
        });
    }

    // Experiment noise on training clients only.
    let unit = config.dataset.video_noise_unit;
    train
        .par_iter_mut()
        .enumerate()
        .for_each(|(i, rec)| {
            let sigma = sigmas[i];
            let noise_seed = derive_seed(cell_seed, STREAM_TRAIN_NOISE + i as u64);
            if sigma > 0.0 {
                match config.noise.target {
                    NoiseTarget::Video => {
                        rec.frames = add_video_noise(&rec.frames, sigma * unit, noise_seed);
                        rec.sigma_video = sigma;
                    }
                    NoiseTarget::Label => {
                        rec.label = add_label_noise(&rec.label, sigma, noise_seed);
                        rec.sigma_label = sigma;
                    }
                }
            }
        });

    let round_config = RoundConfig {
        n_rounds: config.federation.rounds,
        client_fraction: config.federation.client_fraction,
        local_steps: config.federation.local_steps,
        policy,
        quality_map: config.federation.quality_map,
        weight_by_samples: config.federation.weight_by_samples,
        hidden_dim: config.federation.hidden_dim,
        learning_rate: config.federation.learning_rate,
        seed: derive_seed(cell_seed, STREAM_FEDERATION),
    };

    let state = run_federation(&train, &round_config)?;
    let ctx = RunContext {
        noise_target: Some(config.noise.target),
        noise_level: level,
        policy: policy.name().to_string(),
        seed: repeat_seed(config, repeat),
    };
    let row = score_run(&state.global_params, &eval, TruthSource::Programmed, &ctx)?;
    Ok(CellOutcome {
        row,
        history_jsonl: state.history_jsonl(),
    })
}

/// Seed reported in the CSV for a repeat; shared by every cell of that
/// repeat so paired rows are identifiable.
pub fn repeat_seed(config: &ExperimentConfig, repeat: usize) -> u64 {
    config.seed.wrapping_add(repeat as u64)
}

fn cell_seed(config: &ExperimentConfig, level: f64, repeat: usize) -> u64 {
    let target_tag = match config.noise.target {
        NoiseTarget::Video => 1u64,
        NoiseTarget::Label => 2u64,
    };
    let level_bits = level.to_bits();
    let mixed = derive_seed(config.seed, target_tag ^ level_bits.rotate_left(8));
    derive_seed(mixed, repeat as u64)
}

/// `run` subcommand: the full (levels × repeats × policies) sweep with an
/// incrementally written CSV. Per-cell failures are recorded with a
/// `failed` status and the sweep continues.
pub fn cmd_run(
    config: &ExperimentConfig,
    out_dir: &Path,
    dataset_dir: Option<&Path>,
) -> Result<PathBuf> {
    config.validate()?;
    fs::create_dir_all(out_dir)?;
    let base = match dataset_dir {
        Some(dir) => {
            let records = fedppg_core::synth::read_dataset(dir)
                .with_context(|| format!("reading dataset from {}", dir.display()))?;
            records
        }
        None => build_base_dataset(config)?,
    };
    write_manifest(config, out_dir, dataset_dir)?;

    let history_dir = out_dir.join("history");
    fs::create_dir_all(&history_dir)?;
    let csv_path = out_dir.join("results.csv");
    let mut csv = fs::File::create(&csv_path)
        .with_context(|| format!("creating {}", csv_path.display()))?;
    writeln!(csv, "{METRICS_CSV_HEADER},status")?;
    csv.flush()?;

    for &level in &config.levels() {
        for repeat in 0..config.run.repeats {
            for &policy in &config.run.policies {
                let cell = run_cell(config, &base, level, policy, repeat);
                match cell {
                    Ok(outcome) => {
                        let fields = outcome.row.csv_fields().join(",");
                        writeln!(csv, "{fields},ok")?;
                        let history_path = history_dir.join(format!(
                            "{}_{}_{}_r{}.jsonl",
                            target_name(config),
                            format_level(level),
                            policy.name(),
                            repeat
                        ));
                        fs::write(&history_path, &outcome.history_jsonl)?;
                    }
                    Err(err) => {
                        eprintln!(
                            "cell level={level} policy={} repeat={repeat} failed: {err:#}",
                            policy.name()
                        );
                        writeln!(
                            csv,
                            "{},{},{},{},,,,,failed",
                            target_name(config),
                            format_level(level),
                            policy.name(),
                            repeat_seed(config, repeat),
                        )?;
                    }
                }
                csv.flush()?;
            }
        }
    }
    Ok(csv_path)
}

fn target_name(config: &ExperimentConfig) -> &'static str {
    match config.noise.target {
        NoiseTarget::Video => "video",
        NoiseTarget::Label => "label",
    }
}

fn format_level(level: f64) -> String {
    format!("{level:.6}")
}
