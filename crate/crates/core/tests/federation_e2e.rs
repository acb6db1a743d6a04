//! End-to-end federation behavior: single-client training quality,
//! serialized-transport fidelity, and training-progress checks.

use fedppg_core::evaluation::{score_run, RunContext, TruthSource};
use fedppg_core::federation::{
    aggregate, client_update, deserialize_checkpoint, run_federation, select_clients,
    serialize_checkpoint, AggregationPolicy, LocalSteps, QualityMap, RoundConfig, SigmaBounds,
};
use fedppg_core::model::{loss_and_grad, ModelParams};
use fedppg_core::rng::{derive_seed, DetRng};
use fedppg_core::signal::PpgTrace;
use fedppg_core::synth::{generate_subject, FrameSequence, HrProfile, SubjectRecord};

/// Slice a subject into leading/trailing portions by frame count.
fn split_subject(rec: &SubjectRecord, leading_frames: usize) -> (SubjectRecord, SubjectRecord) {
    let px = rec.frames.frame_len();
    let t = rec.frames.t();
    let fps = rec.frames.fps();
    let head_frames =
        FrameSequence::from_raw(rec.frames.data()[..leading_frames * px].to_vec(),
            leading_frames, rec.frames.h(), rec.frames.w(), fps)
        .unwrap();
    let tail_frames = FrameSequence::from_raw(
        rec.frames.data()[leading_frames * px..].to_vec(),
        t - leading_frames,
        rec.frames.h(),
        rec.frames.w(),
        fps,
    )
    .unwrap();
    let head_label =
        PpgTrace::new(rec.label.samples()[..leading_frames - 1].to_vec(), fps).unwrap();
    // Tail label: differences within the tail only (drop the boundary one).
    let tail_label =
        PpgTrace::new(rec.label.samples()[leading_frames..].to_vec(), fps).unwrap();
    let head = SubjectRecord {
        subject_id: rec.subject_id,
        frames: head_frames,
        label: head_label,
        true_hr_bpm: rec.true_hr_bpm.clone(),
        sigma_video: rec.sigma_video,
        sigma_label: rec.sigma_label,
    };
    let tail = SubjectRecord {
        subject_id: rec.subject_id + 1000,
        frames: tail_frames,
        label: tail_label,
        true_hr_bpm: rec.true_hr_bpm.clone(),
        sigma_video: rec.sigma_video,
        sigma_label: rec.sigma_label,
    };
    (head, tail)
}

#[test]
fn single_clean_client_learns_its_subject() {
    // Train on the first 80% of one clean subject for 7 rounds; the held-out
    // tail must evaluate below 5 bpm MAE.
    let rec = generate_subject(0, 90.0, 30.0, (8, 8), HrProfile::constant(102.0), 4242).unwrap();
    let total = rec.frames.t();
    let (train, eval) = split_subject(&rec, (total * 4) / 5);

    let mut config = RoundConfig::new(AggregationPolicy::FedAvg, 99);
    config.hidden_dim = 16;
    let state = run_federation(&[train], &config).unwrap();

    let ctx = RunContext {
        noise_target: None,
        noise_level: 0.0,
        policy: "fedavg".into(),
        seed: 99,
    };
    let row = score_run(&state.global_params, &[eval], TruthSource::Programmed, &ctx).unwrap();
    assert!(row.n_windows >= 1);
    assert!(row.mae_bpm < 5.0, "held-out MAE {}", row.mae_bpm);
}

#[test]
fn fifty_epochs_cut_training_mse_to_quarter() {
    let rec = generate_subject(0, 20.0, 30.0, (4, 4), HrProfile::constant(95.0), 8).unwrap();
    let windows = fedppg_core::federation::build_training_windows(&rec);
    let initial_params = ModelParams::<f64>::init_two_layer(rec.frames.frame_len(), 16, 17);
    let mse = |p: &ModelParams<f64>| -> f64 {
        windows.iter().map(|w| loss_and_grad(p, w).unwrap().0).sum::<f64>() / windows.len() as f64
    };
    let before = mse(&initial_params);
    let mut params = initial_params;
    for epoch in 0..50 {
        let msg = client_update(
            &rec,
            &params,
            LocalSteps::OnePass,
            QualityMap::Inverse,
            SigmaBounds { min: 0.0, max: 0.0 },
            1e-3,
            epoch,
        )
        .unwrap();
        params = msg.params;
    }
    let after = mse(&params);
    assert!(
        after < 0.25 * before,
        "training MSE {before} -> {after}, expected < 25%"
    );
}

#[test]
fn serialized_transport_is_bit_identical_to_in_memory() {
    // Re-run the round loop with every message passed through the
    // checkpoint codec; final parameters must match run_federation exactly.
    let clients: Vec<SubjectRecord> = (0..4)
        .map(|i| {
            generate_subject(i, 15.0, 30.0, (4, 4), HrProfile::constant(90.0 + i as f64), 70 + i as u64)
                .unwrap()
        })
        .collect();
    let mut config = RoundConfig::new(AggregationPolicy::FedWeight, 2024);
    config.n_rounds = 3;
    config.hidden_dim = 6;

    let reference = run_federation(&clients, &config).unwrap();

    // Manual loop with serialization on both legs of the exchange.
    let ids: Vec<u32> = clients.iter().map(|c| c.subject_id).collect();
    let input_dim = clients[0].frames.frame_len();
    let mut global = ModelParams::<f64>::init_two_layer(
        input_dim,
        config.hidden_dim,
        derive_seed(config.seed, u64::MAX),
    );
    for round_id in 1..=config.n_rounds {
        let mut rng = DetRng::new(derive_seed(config.seed, round_id));
        let selected = select_clients(&ids, config.client_fraction, &mut rng).unwrap();
        let mut updates = Vec::new();
        for id in selected {
            // Server → client leg.
            let broadcast = deserialize_checkpoint(&serialize_checkpoint(&global)).unwrap();
            let record = clients.iter().find(|c| c.subject_id == id).unwrap();
            let mut msg = client_update(
                record,
                &broadcast,
                config.local_steps,
                config.quality_map,
                SigmaBounds::from_cohort(clients.iter().map(|c| c.sigma_video + c.sigma_label)),
                config.learning_rate,
                round_id,
            )
            .unwrap();
            // Client → server leg.
            msg.params = deserialize_checkpoint(&serialize_checkpoint(&msg.params)).unwrap();
            updates.push(msg);
        }
        updates.sort_by_key(|u| u.client_id);
        let (next, _) = aggregate(&updates, config.policy, config.weight_by_samples).unwrap();
        global = next;
    }
    assert_eq!(reference.global_params, global);
}

#[test]
fn quality_map_changes_weights_but_not_clean_run() {
    // All-clean clients: every quality map degenerates to uniform weights,
    // so final parameters agree bit-for-bit across maps.
    let clients: Vec<SubjectRecord> = (0..3)
        .map(|i| {
            generate_subject(i, 15.0, 30.0, (4, 4), HrProfile::constant(100.0), 500 + i as u64)
                .unwrap()
        })
        .collect();
    let mut reference: Option<ModelParams<f64>> = None;
    for map in [QualityMap::Inverse, QualityMap::MaxMinus, QualityMap::Literal] {
        let mut config = RoundConfig::new(AggregationPolicy::FedWeight, 37);
        config.n_rounds = 2;
        config.hidden_dim = 4;
        config.quality_map = map;
        let state = run_federation(&clients, &config).unwrap();
        match &reference {
            None => reference = Some(state.global_params),
            Some(r) => assert_eq!(r, &state.global_params, "map {map:?} diverged"),
        }
    }
}
