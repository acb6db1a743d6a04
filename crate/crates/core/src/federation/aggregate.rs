//! Convex-combination aggregation of client parameters.

use serde::{Deserialize, Serialize};

use crate::model::ModelParams;
use crate::scalar::Scalar;

use super::round::ClientUpdateMsg;
use super::{normalize_qualities, FederationError};

/// Server-side combination rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationPolicy {
    /// Uniform weights over participants.
    FedAvg,
    /// Weights proportional to each participant's raw quality score.
    FedWeight,
}

impl AggregationPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            AggregationPolicy::FedAvg => "fedavg",
            AggregationPolicy::FedWeight => "fedweight",
        }
    }
}

impl std::str::FromStr for AggregationPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fedavg" => Ok(AggregationPolicy::FedAvg),
            "fedweight" => Ok(AggregationPolicy::FedWeight),
            other => Err(format!("unknown aggregation policy `{other}`")),
        }
    }
}

/// Per-client λ report: (client id, aggregation weight), in ascending id
/// order.
pub type LambdaReport = Vec<(u32, f64)>;

/// Combine client updates: `p_server = Σ λ_i · p_i` for every weight and
/// bias tensor independently, with `Σ λ = 1`.
///
/// Under FedAvg every raw weight is 1; under FedWeight it is the client's
/// quality score, optionally multiplied by its sample count when
/// `weight_by_samples` is set. Updates are combined in ascending client-id
/// order so results are bitwise reproducible.
///
/// Returns the aggregated parameters and the λ used per update (in the
/// sorted order).
pub fn aggregate<S: Scalar>(
    updates: &[ClientUpdateMsg<S>],
    policy: AggregationPolicy,
    weight_by_samples: bool,
) -> Result<(ModelParams<S>, LambdaReport), FederationError> {
    if updates.is_empty() {
        return Err(FederationError::NoParticipants { round: 0 });
    }
    let mut order: Vec<usize> = (0..updates.len()).collect();
    order.sort_by_key(|&i| updates[i].client_id);

    for &i in &order {
        updates[order[0]]
            .params
            .congruent_with(&updates[i].params)
            .map_err(|e| match e {
                crate::model::ModelError::ShapeMismatch { layer, detail } => {
                    FederationError::AggregationShape { layer, detail }
                }
                other => FederationError::Model(other),
            })?;
    }

    let raw: Vec<f64> = order
        .iter()
        .map(|&i| {
            let u = &updates[i];
            let base = match policy {
                AggregationPolicy::FedAvg => 1.0,
                AggregationPolicy::FedWeight => u.quality_raw,
            };
            if weight_by_samples {
                base * u.n_samples as f64
            } else {
                base
            }
        })
        .collect();
    let lambdas = normalize_qualities(&raw);

    let mut out = updates[order[0]].params.zeros_like();
    for (k, &i) in order.iter().enumerate() {
        let lambda = S::from_f64_c(lambdas[k]);
        for (acc, src) in out.layers.iter_mut().zip(&updates[i].params.layers) {
            for (a, &v) in acc
                .weight
                .iter_mut()
                .chain(acc.bias.iter_mut())
                .zip(src.weight.iter().chain(src.bias.iter()))
            {
                *a += lambda * v;
            }
        }
    }
    let report = order
        .iter()
        .zip(&lambdas)
        .map(|(&i, &l)| (updates[i].client_id, l))
        .collect();
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::DetRng;

    fn scalar_update(client_id: u32, value: f64, quality: f64) -> ClientUpdateMsg<f64> {
        let layer = crate::model::LayerParams {
            name: "p".into(),
            rows: 1,
            cols: 1,
            weight: vec![value],
            bias: vec![0.0],
        };
        ClientUpdateMsg {
            round_id: 1,
            client_id,
            params: ModelParams { layers: vec![layer] },
            quality_raw: quality,
            n_samples: 10,
            mean_loss: 0.0,
        }
    }

    fn random_update(client_id: u32, quality: f64, seed: u64) -> ClientUpdateMsg<f64> {
        let mut p = ModelParams::<f64>::init_two_layer(6, 4, seed);
        let mut rng = DetRng::new(seed ^ 0xABCD);
        for l in &mut p.layers {
            for v in l.weight.iter_mut().chain(l.bias.iter_mut()) {
                *v = rng.normal();
            }
        }
        ClientUpdateMsg {
            round_id: 0,
            client_id,
            params: p,
            quality_raw: quality,
            n_samples: 17,
            mean_loss: 0.0,
        }
    }

    #[test]
    fn fedavg_is_plain_mean() {
        let updates = vec![scalar_update(0, 4.0, 1.0), scalar_update(1, 2.0, 9.0)];
        let (out, lambdas) = aggregate(&updates, AggregationPolicy::FedAvg, false).unwrap();
        assert_eq!(out.layers[0].weight[0], 3.0);
        assert_eq!(lambdas, vec![(0, 0.5), (1, 0.5)]);
    }

    #[test]
    fn fedweight_quality_ratio() {
        let updates = vec![
            scalar_update(0, 4.0, 2.0),
            scalar_update(1, 1.0, 1.0),
            scalar_update(2, 1.0, 1.0),
        ];
        let (out, _) = aggregate(&updates, AggregationPolicy::FedWeight, false).unwrap();
        assert!((out.layers[0].weight[0] - 2.5).abs() < 1e-15);
    }

    #[test]
    fn uniform_quality_equals_fedavg_bitwise() {
        let updates: Vec<_> = (0..5)
            .map(|i| random_update(i, 0.8, 1000 + i as u64))
            .collect();
        let (avg, _) = aggregate(&updates, AggregationPolicy::FedAvg, false).unwrap();
        let (weighted, _) = aggregate(&updates, AggregationPolicy::FedWeight, false).unwrap();
        assert_eq!(avg, weighted);
    }

    #[test]
    fn permutation_invariant() {
        let mut updates: Vec<_> = (0..6)
            .map(|i| random_update(i, 0.3 + i as f64, 2000 + i as u64))
            .collect();
        let (a, _) = aggregate(&updates, AggregationPolicy::FedWeight, false).unwrap();
        updates.reverse();
        updates.swap(0, 3);
        let (b, _) = aggregate(&updates, AggregationPolicy::FedWeight, false).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_positive_quality_wins() {
        let updates = vec![
            random_update(0, 0.0, 1),
            random_update(1, 3.5, 2),
            random_update(2, 0.0, 3),
        ];
        let (out, _) = aggregate(&updates, AggregationPolicy::FedWeight, false).unwrap();
        assert_eq!(out, updates[1].params);
    }

    #[test]
    fn convexity_bounds_every_parameter() {
        let updates: Vec<_> = (0..4)
            .map(|i| random_update(i, 1.0 + i as f64, 3000 + i as u64))
            .collect();
        let (out, _) = aggregate(&updates, AggregationPolicy::FedWeight, false).unwrap();
        let flats: Vec<Vec<f64>> = updates.iter().map(|u| u.params.flatten()).collect();
        for (k, v) in out.flatten().iter().enumerate() {
            let lo = flats.iter().map(|f| f[k]).fold(f64::INFINITY, f64::min);
            let hi = flats.iter().map(|f| f[k]).fold(f64::NEG_INFINITY, f64::max);
            assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12, "param {k}");
        }
    }

    #[test]
    fn sample_weighting_mode() {
        let mut a = scalar_update(0, 1.0, 1.0);
        a.n_samples = 30;
        let mut b = scalar_update(1, 4.0, 1.0);
        b.n_samples = 10;
        let (out, _) = aggregate(&[a, b], AggregationPolicy::FedAvg, true).unwrap();
        // (30·1 + 10·4) / 40 = 1.75
        assert!((out.layers[0].weight[0] - 1.75).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch_names_layer() {
        let a = random_update(0, 1.0, 1);
        let mut b = random_update(1, 1.0, 2);
        b.params.layers[1].name = "other".into();
        match aggregate(&[a, b], AggregationPolicy::FedAvg, false) {
            Err(FederationError::AggregationShape { layer, .. }) => {
                assert_eq!(layer, "output");
            }
            other => panic!("expected shape error, got {other:?}"),
        }
    }

    #[test]
    fn empty_updates_rejected() {
        let r = aggregate::<f64>(&[], AggregationPolicy::FedAvg, false);
        assert!(matches!(r, Err(FederationError::NoParticipants { .. })));
    }
}
