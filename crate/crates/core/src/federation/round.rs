//! Client update and the server round loop.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{
    adam_step, loss_and_grad, make_difference_frames, ModelParams, OptimizerState,
    TrainingWindow, WINDOW_FRAMES,
};
use crate::rng::{derive_seed, DetRng};
use crate::synth::SubjectRecord;

use super::aggregate::{aggregate, AggregationPolicy};
use super::quality::{compute_quality, QualityMap, SigmaBounds};
use super::FederationError;

/// How much local work one client performs per round.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocalSteps {
    /// One optimizer step per training window, in order (the default).
    #[default]
    OnePass,
    /// A fixed number of optimizer steps, cycling over the windows.
    Steps(usize),
}

/// Round and client configuration for a federation run.
#[derive(Debug, Clone)]
pub struct RoundConfig {
    pub n_rounds: u64,
    pub client_fraction: f64,
    pub local_steps: LocalSteps,
    pub policy: AggregationPolicy,
    pub quality_map: QualityMap,
    /// Multiply aggregation weights by per-client sample counts.
    pub weight_by_samples: bool,
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl RoundConfig {
    pub fn new(policy: AggregationPolicy, seed: u64) -> Self {
        Self {
            n_rounds: 7,
            client_fraction: 1.0,
            local_steps: LocalSteps::OnePass,
            policy,
            quality_map: QualityMap::Inverse,
            weight_by_samples: false,
            hidden_dim: 16,
            learning_rate: 1e-3,
            seed,
        }
    }
}

/// The payload a client returns to the server after one round.
#[derive(Debug, Clone)]
pub struct ClientUpdateMsg<S: crate::scalar::Scalar> {
    pub round_id: u64,
    pub client_id: u32,
    pub params: ModelParams<S>,
    pub quality_raw: f64,
    pub n_samples: usize,
    pub mean_loss: f64,
}

/// Per-round record of who participated and how they were weighted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundLog {
    pub round_id: u64,
    pub participants: Vec<u32>,
    pub lambdas: Vec<f64>,
    pub mean_client_loss: f64,
    pub failed: Vec<u32>,
}

/// Server-side result of a run: final parameters plus per-round history.
#[derive(Debug, Clone)]
pub struct ServerState {
    pub global_params: ModelParams<f64>,
    pub round: u64,
    pub history: Vec<RoundLog>,
}

impl ServerState {
    /// History serialized as JSON lines, one record per round.
    pub fn history_jsonl(&self) -> String {
        let mut out = String::new();
        for log in &self.history {
            out.push_str(&serde_json::to_string(log).expect("round log serializes"));
            out.push('\n');
        }
        out
    }
}

/// Uniform random subset of ⌈fraction·N⌉ clients, without replacement,
/// returned in ascending order.
pub fn select_clients(
    all_clients: &[u32],
    fraction: f64,
    rng: &mut DetRng,
) -> Result<Vec<u32>, FederationError> {
    if all_clients.is_empty() {
        return Err(FederationError::EmptyClientPool);
    }
    let fraction = fraction.clamp(0.0, 1.0);
    let count = ((fraction * all_clients.len() as f64).ceil() as usize)
        .clamp(1, all_clients.len());
    let mut pool = all_clients.to_vec();
    // Partial Fisher-Yates: the first `count` slots become the sample.
    for i in 0..count {
        let j = i + rng.index(pool.len() - i);
        pool.swap(i, j);
    }
    let mut chosen = pool[..count].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Split a subject into 20-frame training windows (inputs are normalized
/// difference frames, targets the label samples). The trailing partial
/// window is dropped.
pub fn build_training_windows(record: &SubjectRecord) -> Vec<TrainingWindow<f64>> {
    let inputs: Vec<Vec<f64>> = make_difference_frames(&record.frames);
    let targets = record.label.samples();
    inputs
        .chunks_exact(WINDOW_FRAMES)
        .zip(targets.chunks_exact(WINDOW_FRAMES))
        .map(|(xs, ys)| {
            TrainingWindow::new(xs.to_vec(), ys.to_vec()).expect("aligned chunks")
        })
        .collect()
}

/// One client's local training pass: copy the global parameters, run Adam
/// over the client's windows with fresh optimizer state, and return the
/// trained parameters with the client's quality score and window count.
///
/// `sigma_bounds` are the cohort bounds the server distributes so each
/// client can normalize its own noise level before applying the map.
pub fn client_update(
    record: &SubjectRecord,
    global_params: &ModelParams<f64>,
    local_steps: LocalSteps,
    quality_map: QualityMap,
    sigma_bounds: SigmaBounds,
    learning_rate: f64,
    round_id: u64,
) -> Result<ClientUpdateMsg<f64>, FederationError> {
    let windows = build_training_windows(record);
    let n_samples = windows.len();
    let sigma = record.sigma_video + record.sigma_label;
    let quality_raw = compute_quality(sigma_bounds.normalize(sigma), quality_map);

    let steps = match local_steps {
        LocalSteps::OnePass => n_samples,
        LocalSteps::Steps(n) => n,
    };

    let mut params = global_params.clone();
    let mut loss_sum = 0.0f64;
    if steps > 0 && n_samples > 0 {
        let mut opt = OptimizerState::with_lr(&params, learning_rate);
        for k in 0..steps {
            let window = &windows[k % n_samples];
            let (loss, grads) =
                loss_and_grad(&params, window).map_err(|source| FederationError::ClientTraining {
                    client_id: record.subject_id,
                    source,
                })?;
            params = adam_step(&params, &grads, &mut opt)
                .map_err(|source| FederationError::ClientTraining {
                    client_id: record.subject_id,
                    source,
                })?;
            loss_sum += loss;
        }
    }
    let mean_loss = if steps > 0 { loss_sum / steps as f64 } else { 0.0 };

    Ok(ClientUpdateMsg {
        round_id,
        client_id: record.subject_id,
        params,
        quality_raw,
        n_samples,
        mean_loss,
    })
}

/// The full round loop: select → train all selected clients (in parallel,
/// each on its own parameter copy) → aggregate. Clients whose training
/// overflows are dropped from the round and logged; the λ of the remaining
/// participants renormalize to one. Deterministic given the dataset and
/// `config.seed`.
pub fn run_federation(
    clients: &[SubjectRecord],
    config: &RoundConfig,
) -> Result<ServerState, FederationError> {
    if clients.is_empty() {
        return Err(FederationError::EmptyClientPool);
    }
    let input_dim = clients[0].frames.frame_len();
    let init_seed = derive_seed(config.seed, u64::MAX);
    let mut state = ServerState {
        global_params: ModelParams::init_two_layer(input_dim, config.hidden_dim, init_seed),
        round: 0,
        history: Vec::new(),
    };
    let ids: Vec<u32> = clients.iter().map(|c| c.subject_id).collect();
    let sigma_bounds =
        SigmaBounds::from_cohort(clients.iter().map(|c| c.sigma_video + c.sigma_label));

    for round_id in 1..=config.n_rounds {
        let mut rng = DetRng::new(derive_seed(config.seed, round_id));
        let selected = select_clients(&ids, config.client_fraction, &mut rng)?;

        let results: Vec<(u32, Result<ClientUpdateMsg<f64>, FederationError>)> = selected
            .par_iter()
            .map(|&id| {
                let record = clients
                    .iter()
                    .find(|c| c.subject_id == id)
                    .expect("selected id exists");
                (
                    id,
                    client_update(
                        record,
                        &state.global_params,
                        config.local_steps,
                        config.quality_map,
                        sigma_bounds,
                        config.learning_rate,
                        round_id,
                    ),
                )
            })
            .collect();

        let mut updates = Vec::with_capacity(results.len());
        let mut failed = Vec::new();
        for (id, result) in results {
            match result {
                Ok(update) => updates.push(update),
                Err(_) => failed.push(id),
            }
        }
        if updates.is_empty() {
            return Err(FederationError::NoParticipants { round: round_id });
        }
        updates.sort_by_key(|u| u.client_id);
        let mean_client_loss =
            updates.iter().map(|u| u.mean_loss).sum::<f64>() / updates.len() as f64;

        let (global, lambda_report) =
            aggregate(&updates, config.policy, config.weight_by_samples)?;
        state.global_params = global;
        state.round = round_id;
        state.history.push(RoundLog {
            round_id,
            participants: lambda_report.iter().map(|&(id, _)| id).collect(),
            lambdas: lambda_report.iter().map(|&(_, l)| l).collect(),
            mean_client_loss,
            failed,
        });
    }
    Ok(state)
}
