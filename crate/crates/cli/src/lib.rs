//! Library side of the `qbm` command: run configuration, the five commands
//! and their CSV outputs.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use thiserror::Error;

pub use commands::{
    characterize_coupling, characterize_qubits, load_checkpoint, sample, test, train,
    CouplingSummary, QubitSummary, SampleSummary, TestSummary, TrainSummary, CHECKPOINT_FILE,
    CONFIG_FILE, COUPLING_CSV, PASSES_CSV, QUBITS_CSV, SAMPLES_CSV, SCORES_CSV, SPLIT_FILE,
    TEST_CSV,
};
pub use config::{
    CharacterizeConfig, DataConfig, Overrides, RunConfig, SampleConfig, TestConfig, TileGrid,
};
pub use output::write_atomic;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] qbm_mnist::MnistError),
    #[error(transparent)]
    Network(#[from] qbm_network::NetworkError),
    #[error(transparent)]
    Sampler(#[from] qbm_sampler::SamplerError),
    #[error(transparent)]
    Ising(#[from] qbm_ising::IsingError),
    #[error("problem file: {0}")]
    Problem(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    /// Process exit code: 3 config, 4 data, 5 capacity, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use qbm_network::NetworkError as N;
        use qbm_sampler::SamplerError as S;
        match self {
            Self::Config(_) => 3,
            Self::Data(e) if e.is_capacity() => 5,
            Self::Data(_) | Self::Ising(_) | Self::Problem(_) => 4,
            Self::Network(e) if e.is_capacity() => 5,
            Self::Network(N::Checkpoint { .. } | N::Json(_)) => 4,
            Self::Network(N::Sampler(S::Config(_))) | Self::Sampler(S::Config(_)) => 3,
            Self::Sampler(S::Capacity { .. }) => 5,
            _ => 1,
        }
    }
}
