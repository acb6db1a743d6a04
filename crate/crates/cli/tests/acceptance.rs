//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line with its measured numbers (visible with `--nocapture`).

use std::fs;
use std::path::PathBuf;

use fedppg_cli::config::ExperimentConfig;
use fedppg_cli::runner::{build_base_dataset, cmd_run, run_cell, split_train_eval};
use fedppg_core::evaluation::{postprocess_and_score, TruthSource, EVAL_WINDOW};
use fedppg_core::federation::{
    aggregate, deserialize_checkpoint, run_federation, serialize_checkpoint, AggregationPolicy,
    ClientUpdateMsg, RoundConfig,
};
use fedppg_core::model::{loss_and_grad, ModelParams, TrainingWindow};
use fedppg_core::rng::DetRng;
use fedppg_core::signal::{design_bandpass, detrend, trend, BandpassSpec, PpgTrace};
use fedppg_core::synth::{read_dataset, write_dataset};

fn verdict(name: &str, pass: bool, detail: &str) {
    println!("{name}: {} — {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{name} failed: {detail}");
}

fn random_params(seed: u64) -> ModelParams<f64> {
    let mut p = ModelParams::<f64>::init_two_layer(12, 6, seed);
    let mut rng = DetRng::new(seed ^ 0x5A5A);
    for l in &mut p.layers {
        for v in l.weight.iter_mut().chain(l.bias.iter_mut()) {
            *v = rng.normal() * 2.0;
        }
    }
    p
}

#[test]
fn a1_aggregation_identity() {
    // FedWeight with uniform raw qualities must equal FedAvg to 1e-12 on
    // random parameter sets; 100 randomized trials.
    let mut rng = DetRng::new(1);
    let mut max_delta = 0.0f64;
    for trial in 0..100u64 {
        let n = 2 + (rng.index(8));
        let quality = rng.uniform_in(0.1, 5.0);
        let updates: Vec<ClientUpdateMsg<f64>> = (0..n)
            .map(|i| ClientUpdateMsg {
                round_id: 0,
                client_id: i as u32,
                params: random_params(trial * 100 + i as u64),
                quality_raw: quality,
                n_samples: 7,
                mean_loss: 0.0,
            })
            .collect();
        let (avg, _) = aggregate(&updates, AggregationPolicy::FedAvg, false).unwrap();
        let (weighted, _) = aggregate(&updates, AggregationPolicy::FedWeight, false).unwrap();
        for (a, w) in avg.flatten().iter().zip(weighted.flatten()) {
            max_delta = max_delta.max((a - w).abs());
        }
    }
    verdict(
        "A1 aggregation-identity",
        max_delta < 1e-12,
        &format!("max |Δ| = {max_delta:.3e} over 100 trials"),
    );
}

#[test]
fn a2_noise_zero_equivalence() {
    // Full 7-round runs at noise level 0 with the same seed: FedAvg and
    // FedWeight produce bit-identical final parameters.
    let config = ExperimentConfig::default();
    let base = build_base_dataset(&config).unwrap();
    let (train, _) = split_train_eval(&base);
    let mut identical = true;
    let mut detail = String::new();
    for seed in [7u64, 8u64] {
        let avg = run_federation(&train, &RoundConfig::new(AggregationPolicy::FedAvg, seed))
            .unwrap();
        let weighted =
            run_federation(&train, &RoundConfig::new(AggregationPolicy::FedWeight, seed))
                .unwrap();
        let same = avg.global_params == weighted.global_params;
        identical &= same;
        detail.push_str(&format!("seed {seed}: {} ", if same { "identical" } else { "DIFFER" }));
    }
    verdict("A2 noise-zero-equivalence", identical, detail.trim());
}

struct PairedStats {
    wins: usize,
    total: usize,
    median_reduction_pct: f64,
}

fn paired_stats(pairs: &[(f64, f64)]) -> PairedStats {
    let wins = pairs.iter().filter(|(avg, wgt)| wgt < avg).count();
    let mut reductions: Vec<f64> = pairs
        .iter()
        .map(|(avg, wgt)| if *avg > 0.0 { (avg - wgt) / avg * 100.0 } else { 0.0 })
        .collect();
    reductions.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = reductions.len();
    let median = if n % 2 == 1 {
        reductions[n / 2]
    } else {
        0.5 * (reductions[n / 2 - 1] + reductions[n / 2])
    };
    PairedStats {
        wins,
        total: pairs.len(),
        median_reduction_pct: median,
    }
}

#[test]
fn a3_video_noise_robustness_trend() {
    // 25 synthetic clients, inverse quality map, video-noise levels
    // {0.5, 1.0, 1.5}, 10 paired seeds per level: FedWeight MAE < FedAvg
    // MAE in ≥ 8/10 seeds per level, median relative reduction ≥ 10% at
    // levels ≥ 1.0.
    let config = ExperimentConfig::default();
    assert_eq!(config.dataset.subjects, 25);
    let base = build_base_dataset(&config).unwrap();
    let mut all_pass = true;
    let mut detail = String::new();
    for &level in &[0.5f64, 1.0, 1.5] {
        let mut pairs = Vec::new();
        for repeat in 0..10 {
            let avg = run_cell(&config, &base, level, AggregationPolicy::FedAvg, repeat)
                .unwrap()
                .row
                .mae_bpm;
            let wgt = run_cell(&config, &base, level, AggregationPolicy::FedWeight, repeat)
                .unwrap()
                .row
                .mae_bpm;
            pairs.push((avg, wgt));
        }
        let stats = paired_stats(&pairs);
        let wins_ok = stats.wins >= 8;
        let median_ok = level < 1.0 || stats.median_reduction_pct >= 10.0;
        all_pass &= wins_ok && median_ok;
        detail.push_str(&format!(
            "L={level}: wins {}/{} median {:+.1}% | ",
            stats.wins, stats.total, stats.median_reduction_pct
        ));
    }
    verdict("A3 video-noise-robustness", all_pass, detail.trim_end_matches(" | "));
}

#[test]
fn a4_label_noise_insensitivity() {
    // FedAvg's MAE inflation from label noise 4.5 must be smaller than its
    // inflation from video noise 1.0, over 10-seed medians.
    let mut video_cfg = ExperimentConfig::default();
    video_cfg.set("noise.target", "video").unwrap();
    let mut label_cfg = ExperimentConfig::default();
    label_cfg.set("noise.target", "label").unwrap();
    let base = build_base_dataset(&video_cfg).unwrap();

    let median_mae = |config: &ExperimentConfig, level: f64| -> f64 {
        let mut maes: Vec<f64> = (0..10)
            .map(|r| {
                run_cell(config, &base, level, AggregationPolicy::FedAvg, r)
                    .unwrap()
                    .row
                    .mae_bpm
            })
            .collect();
        maes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        0.5 * (maes[4] + maes[5])
    };

    let clean = median_mae(&video_cfg, 0.0);
    let video = median_mae(&video_cfg, 1.0);
    let label = median_mae(&label_cfg, 4.5);
    let label_inflation = label / clean;
    let video_inflation = video / clean;
    verdict(
        "A4 label-noise-insensitivity",
        label_inflation < video_inflation,
        &format!(
            "clean {clean:.2}, label@4.5 {label:.2} (x{label_inflation:.2}), video@1.0 {video:.2} (x{video_inflation:.2})"
        ),
    );
}

#[test]
fn a5_hr_pipeline_accuracy() {
    // Clean synthetic PPG at {48, 72, 100, 140} bpm through the full
    // pipeline (cumsum → detrend λ=10 → 360-sample windows → Butterworth →
    // spectral peak): absolute error ≤ 1 bpm in every window.
    let fs = 30.0;
    let n = 1800;
    let mut max_err = 0.0f64;
    for &bpm in &[48.0f64, 72.0, 100.0, 140.0] {
        let f = bpm / 60.0;
        // Derivative of a clean pulse tone, standardized like a label.
        let wave = |t: f64| (2.0 * std::f64::consts::PI * f * t).sin();
        let mut deriv: Vec<f64> = (0..n - 1)
            .map(|i| wave((i + 1) as f64 / fs) - wave(i as f64 / fs))
            .collect();
        let mean = deriv.iter().sum::<f64>() / deriv.len() as f64;
        let var = deriv.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / deriv.len() as f64;
        for v in &mut deriv {
            *v = (*v - mean) / var.sqrt();
        }
        let trace = PpgTrace::new(deriv, fs).unwrap();
        let windows =
            postprocess_and_score(&trace, &trace, |_| bpm, TruthSource::Programmed, 0).unwrap();
        assert_eq!(windows.len(), (n - 1) / EVAL_WINDOW);
        for w in &windows {
            max_err = max_err.max((w.pred_hr_bpm - bpm).abs());
        }
    }
    verdict(
        "A5 hr-pipeline-accuracy",
        max_err <= 1.0,
        &format!("max |error| = {max_err:.3} bpm over 48/72/100/140"),
    );
}

#[test]
fn a6_gradient_correctness() {
    // 20 random model instances: analytic gradients vs central finite
    // differences (h = 1e-5), max relative error < 1e-4.
    let mut rng = DetRng::new(60);
    let mut max_rel = 0.0f64;
    for trial in 0..20u64 {
        let dim = 3 + (trial as usize % 6);
        let hidden = 2 + (trial as usize % 4);
        let params = ModelParams::<f64>::init_two_layer(dim, hidden, 7000 + trial);
        let inputs: Vec<Vec<f64>> = (0..10).map(|_| (0..dim).map(|_| rng.normal()).collect()).collect();
        let targets: Vec<f64> = (0..10).map(|_| rng.normal()).collect();
        let window = TrainingWindow::new(inputs, targets).unwrap();
        let (_, grads) = loss_and_grad(&params, &window).unwrap();
        let flat = grads.flatten();
        let h = 1e-5;
        for k in 0..params.param_count() {
            let mut plus = params.clone();
            *plus.param_mut(k) += h;
            let mut minus = params.clone();
            *minus.param_mut(k) -= h;
            let (lp, _) = loss_and_grad(&plus, &window).unwrap();
            let (lm, _) = loss_and_grad(&minus, &window).unwrap();
            let numeric = (lp - lm) / (2.0 * h);
            let denom = numeric.abs().max(flat[k].abs()).max(1e-8);
            max_rel = max_rel.max((flat[k] - numeric).abs() / denom);
        }
    }
    verdict(
        "A6 gradient-correctness",
        max_rel < 1e-4,
        &format!("max relative error {max_rel:.3e} over 20 instances"),
    );
}

#[test]
fn a7_filter_correctness() {
    // Designed band edges sit at −3 dB (±0.25) against the analytic
    // prototype magnitude; the zero-phase application attenuates DC and
    // 5 Hz by more than 20 dB at fs = 30.
    let fs = 30.0;
    let spec = BandpassSpec::heart_rate(fs).unwrap();
    let filter = design_bandpass(&spec).unwrap();

    // Analytic oracle: |H| = 1/sqrt(1 + v^(2N)) with v the prewarped
    // lowpass-equivalent frequency.
    let oracle = |f_hz: f64| -> f64 {
        let warp = |f: f64| 2.0 * fs * (std::f64::consts::PI * f / fs).tan();
        let (wl, wh) = (warp(spec.low_hz), warp(spec.high_hz));
        let w0sq = wl * wh;
        let bw = wh - wl;
        let omega = warp(f_hz);
        let v = (omega * omega - w0sq) / (bw * omega);
        1.0 / (1.0 + v.powi(2 * spec.order as i32)).sqrt()
    };

    let mut pass = true;
    let mut detail = String::new();
    for edge in [0.75, 2.5] {
        let designed_db = 20.0 * filter.magnitude_at(edge, fs).log10();
        let oracle_db = 20.0 * oracle(edge).log10();
        let edge_ok = (designed_db + 3.0).abs() <= 0.25 && (designed_db - oracle_db).abs() < 0.01;
        pass &= edge_ok;
        detail.push_str(&format!("{edge} Hz: {designed_db:.3} dB (oracle {oracle_db:.3}) | "));
    }
    // Zero-phase (forward-backward) response is the squared magnitude.
    let dc_db = 40.0 * filter.magnitude_at(0.0, fs).max(1e-300).log10();
    let five_db = 40.0 * filter.magnitude_at(5.0, fs).log10();
    pass &= dc_db < -20.0 && five_db < -20.0;
    detail.push_str(&format!("zero-phase DC {dc_db:.1} dB, 5 Hz {five_db:.1} dB"));
    verdict("A7 filter-correctness", pass, &detail);
}

#[test]
fn a8_detrend_decomposition() {
    // detrend(z) + trend(z) = z to 1e-9 relative on 100 random traces of
    // length 360; λ = 0 yields the zero vector.
    let mut rng = DetRng::new(88);
    let mut max_rel = 0.0f64;
    for _ in 0..100 {
        let samples: Vec<f64> = (0..360).map(|_| rng.normal() * 5.0).collect();
        let trace = PpgTrace::new(samples.clone(), 30.0).unwrap();
        let stat = detrend(&trace, 10.0).unwrap();
        let tre = trend(&trace, 10.0).unwrap();
        for i in 0..samples.len() {
            let rebuilt = stat.samples()[i] + tre.samples()[i];
            let rel = (rebuilt - samples[i]).abs() / samples[i].abs().max(1.0);
            max_rel = max_rel.max(rel);
        }
    }
    let zero_in: Vec<f64> = (0..360).map(|_| rng.normal()).collect();
    let zeroed = detrend(&PpgTrace::new(zero_in, 30.0).unwrap(), 0.0).unwrap();
    let lambda_zero_ok = zeroed.samples().iter().all(|&v| v == 0.0);
    verdict(
        "A8 detrend-decomposition",
        max_rel < 1e-9 && lambda_zero_ok,
        &format!("max relative residual {max_rel:.3e}; λ=0 zero vector: {lambda_zero_ok}"),
    );
}

#[test]
fn a9_serialization_and_determinism() {
    let tmp = std::env::temp_dir().join(format!("fedppg-acceptance-{}", std::process::id()));
    let _ = fs::remove_dir_all(&tmp);

    // Checkpoint round trip.
    let params = random_params(4141);
    let checkpoint_ok = deserialize_checkpoint(&serialize_checkpoint(&params)).unwrap() == params;

    // Dataset round trip.
    let mut small = ExperimentConfig::default();
    small.set("dataset.subjects", "4").unwrap();
    small.set("dataset.duration-s", "15").unwrap();
    small.set("dataset.height", "4").unwrap();
    small.set("dataset.width", "4").unwrap();
    let records = build_base_dataset(&small).unwrap();
    let ds_dir = tmp.join("ds");
    write_dataset(&records, &ds_dir).unwrap();
    let dataset_ok = read_dataset(&ds_dir).unwrap() == records;

    // cmd_run byte-identical across two invocations with the same seed.
    let mut run_cfg = ExperimentConfig::default();
    run_cfg.set("dataset.subjects", "5").unwrap();
    run_cfg.set("dataset.duration-s", "15").unwrap();
    run_cfg.set("dataset.height", "4").unwrap();
    run_cfg.set("dataset.width", "4").unwrap();
    run_cfg.set("noise.levels", "0,0.5").unwrap();
    run_cfg.set("run.repeats", "1").unwrap();
    run_cfg.set("federation.rounds", "2").unwrap();
    let csv_a = cmd_run(&run_cfg, &tmp.join("runA"), None).unwrap();
    let csv_b = cmd_run(&run_cfg, &tmp.join("runB"), None).unwrap();
    let bytes_a = fs::read(&csv_a).unwrap();
    let bytes_b = fs::read(&csv_b).unwrap();
    let rerun_ok = bytes_a == bytes_b;

    let _ = fs::remove_dir_all(&tmp);
    verdict(
        "A9 serialization-and-determinism",
        checkpoint_ok && dataset_ok && rerun_ok,
        &format!("checkpoint {checkpoint_ok}, dataset {dataset_ok}, rerun byte-identical {rerun_ok}"),
    );
}

#[test]
fn binary_smoke_run_and_report() {
    // The real binary end to end on a tiny grid: run then report.
    let tmp = std::env::temp_dir().join(format!("fedppg-bin-smoke-{}", std::process::id()));
    let _ = fs::remove_dir_all(&tmp);
    let out: PathBuf = tmp.join("out");
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_fedppg"))
        .stdout(std::process::Stdio::null())
        .args([
            "run",
            "--out",
            out.to_str().unwrap(),
            "--levels",
            "0,0.5",
            "--repeats",
            "1",
            "--set",
            "dataset.subjects=5",
            "--set",
            "dataset.duration-s=15",
            "--set",
            "dataset.height=4",
            "--set",
            "dataset.width=4",
            "--set",
            "federation.rounds=2",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let csv = out.join("results.csv");
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 2); // header + levels×policies×repeats

    let status = std::process::Command::new(env!("CARGO_BIN_EXE_fedppg"))
        .stdout(std::process::Stdio::null())
        .args(["report", csv.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("report.md").exists());
    let svg = fs::read_to_string(out.join("mae_vs_noise.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    let _ = fs::remove_dir_all(&tmp);
}
