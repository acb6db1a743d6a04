//! Client/server round protocol with pluggable aggregation.
//!
//! Each round: select clients, train each selected client locally from the
//! current global parameters (clients may run in parallel; every client
//! owns a private copy), then combine the returned parameters as a convex
//! combination. FedAvg uses uniform weights; FedWeight weights by
//! normalized per-client signal quality. Messages are value-semantic: once
//! returned, a client update is never mutated.

mod aggregate;
mod checkpoint;
mod quality;
mod round;

pub use aggregate::{aggregate, AggregationPolicy};
pub use checkpoint::{deserialize_checkpoint, serialize_checkpoint, CheckpointError};
pub use quality::{compute_quality, normalize_qualities, QualityMap, SigmaBounds, QUALITY_EPSILON};
pub use round::{
    build_training_windows, client_update, run_federation, select_clients, ClientUpdateMsg,
    LocalSteps, RoundConfig, RoundLog, ServerState,
};

use thiserror::Error;

/// Errors from the federation protocol.
#[derive(Debug, Error)]
pub enum FederationError {
    #[error("no clients available")]
    EmptyClientPool,
    #[error("no usable client updates in round {round}")]
    NoParticipants { round: u64 },
    #[error("aggregation shape mismatch in layer `{layer}`: {detail}")]
    AggregationShape { layer: String, detail: String },
    #[error("client {client_id}: {source}")]
    ClientTraining {
        client_id: u32,
        #[source]
        source: crate::model::ModelError,
    },
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}
