//! Scenario construction: topologies, communication matrices, cross
//! traffic and the model parameters a run uses.

mod bound;
mod matrix;
mod model;
mod topology;
mod traffic;

pub use bound::compute_avb_latency_bound;
pub use matrix::{
    generate_synthetic_matrix, parse_matrix, CommMatrix, CommMatrixEntry, Domain, Ecu, MatrixParams,
};
pub use model::ModelParams;
pub use topology::{
    add_zonal_ring_traffic, build_simple_network, build_zonal_network, zonal_class, NodeRole,
    NodeSpec, SimpleOptions, SubscriptionSpec, TopologyDescription, ZonalOptions,
};
pub use traffic::{CrossTrafficProfile, CtMode, InterArrival, MIN_INTER_ARRIVAL};

use crate::net::{NetError, StreamId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid {what} count {value}")]
    InvalidCount { what: &'static str, value: i64 },
    #[error("ECU `{0}` has no zone assignment")]
    UnassignedEcu(String),
    #[error("matrix line {line}: {message}")]
    Matrix { line: usize, message: String },
    #[error("unknown or misplaced node `{0}`")]
    UnknownNode(String),
    #[error("duplicate service `{0}`")]
    DuplicateService(String),
    #[error("no reserved stream {0:?}")]
    UnknownStream(StreamId),
    #[error(transparent)]
    Net(#[from] NetError),
}
