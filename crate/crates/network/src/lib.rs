//! Layered Boltzmann machine whose hidden layers are sampled on a chimera
//! graph.
//!
//! A network is a list of layers joined by fully bipartite weight matrices.
//! Visible layers update through the calibrated sigmoid `1 / (1 + e^(7b))`;
//! hidden layers are sent to a sampler as one Ising problem per physical tile.
//! Training runs the three-phase cycle: phase 1 averages weighted inputs into
//! biases, phase 2 turns biases into expected values, phase 3 moves every
//! trained weight by `k (e_i e_j - f_i f_j)`.

mod checkpoint;
mod config;
mod layer;
mod network;
mod session;

use thiserror::Error;

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::{InputScaling, PresentationOrder, Schedule, TrainConfig, VisibleClamp};
pub use layer::{HiddenLayout, LayerKind, LayerSpec, Tiling, VirtualCoupler, VisibleRole};
pub use network::{
    average_bias, eq5_delta, phase2_visible, rank_flags, Activity, InterLayerWeights, Network,
    NetworkBuilder, SamplingPlan, TestOutcome, RESPONSE_STEEPNESS,
};
pub use session::{
    presentation_order, score_images, score_seed, train_session, PassLog, ScoreRow, SessionReport,
    SetName,
};

pub use qbm_sampler::{Backend, SamplerConfig};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("checkpoint format {found:?} version {version} is not supported (expected {expected:?} version {supported})")]
    Checkpoint {
        found: String,
        version: u32,
        expected: &'static str,
        supported: u32,
    },
    #[error(transparent)]
    Sampler(#[from] qbm_sampler::SamplerError),
    #[error(transparent)]
    Ising(#[from] qbm_ising::IsingError),
    #[error(transparent)]
    Topology(#[from] qbm_chimera::TopologyError),
    #[error("checkpoint JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl NetworkError {
    /// Whether the error comes from a sampler capacity limit.
    pub fn is_capacity(&self) -> bool {
        matches!(
            self,
            Self::Sampler(qbm_sampler::SamplerError::Capacity { .. })
        )
    }
}
