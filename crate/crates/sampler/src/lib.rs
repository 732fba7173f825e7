//! Boltzmann samplers over chimera problems.
//!
//! Reads are drawn from `P(q) ∝ exp(-beta * E(q))`. A lone qubit with linear
//! coefficient `b` is 1 with probability `1 / (1 + exp(beta * b))`, so with the
//! default `beta = 7` the sampler reproduces the measured qubit response
//! `1 / (1 + e^(7b))`.
//!
//! Two backends are provided: a seeded Gibbs sampler and an exact enumerator
//! used as an oracle for small problems.

mod characterize;
mod config;
mod exact;
mod gibbs;
mod reads;
mod stats;

use qbm_ising::{IsingError, IsingProblem, SampleSet};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use characterize::{
    characterize_coupling, characterize_qubits, coefficient_sweep, fit_sigmoid, metric_slope,
    CouplingRow, QubitRow, SigmoidFit,
};
pub use config::{Backend, NoiseModel, SamplerConfig};
pub use exact::{ExactModel, EXACT_LIMIT};
pub use reads::{ReadOffset, Reads};
pub use stats::{coupling_metric, PairStats};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid sampler configuration: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("coupled block of {size} qubits exceeds the exact enumeration limit of {limit}")]
    Capacity { size: usize, limit: usize },
    #[error("coupling metric undefined: joint probabilities {0:?} contain a zero (saturated)")]
    Saturated(PairStats),
    #[error(transparent)]
    Ising(#[from] IsingError),
}

/// Draw `num_reads` reads with the selected backend.
pub fn sample(
    backend: Backend,
    problem: &IsingProblem,
    num_reads: usize,
    config: &SamplerConfig,
) -> Result<SampleSet, SamplerError> {
    let reads = sample_reads(backend, problem, num_reads, config, &[])?;
    Ok(reads.to_sample_set(problem)?)
}

/// Seeded Gibbs sampling; see [`SamplerConfig`] for the scan schedule.
pub fn gibbs_sample(
    problem: &IsingProblem,
    num_reads: usize,
    config: &SamplerConfig,
) -> Result<SampleSet, SamplerError> {
    sample(Backend::Gibbs, problem, num_reads, config)
}

/// I.i.d. reads from the exactly enumerated distribution.
pub fn exact_sample(
    problem: &IsingProblem,
    num_reads: usize,
    config: &SamplerConfig,
) -> Result<SampleSet, SamplerError> {
    sample(Backend::Exact, problem, num_reads, config)
}

/// Compact reads, optionally with per-read linear offsets on a few qubits.
///
/// Offsets shift the effective field of one qubit read by read; they let a
/// caller condition each read on values it drew elsewhere.
pub fn sample_reads(
    backend: Backend,
    problem: &IsingProblem,
    num_reads: usize,
    config: &SamplerConfig,
    offsets: &[ReadOffset],
) -> Result<Reads, SamplerError> {
    config.validate()?;
    if num_reads == 0 {
        return Err(SamplerError::InvalidArgument(
            "num_reads must be at least 1".into(),
        ));
    }
    for o in offsets {
        problem
            .topology()
            .check_active(o.qubit)
            .map_err(IsingError::from)?;
        if o.per_read.len() != num_reads {
            return Err(SamplerError::InvalidArgument(format!(
                "offset for qubit {} has {} entries, expected {num_reads}",
                o.qubit,
                o.per_read.len()
            )));
        }
    }
    match backend {
        Backend::Gibbs => Ok(gibbs::run(problem, num_reads, config, offsets)),
        Backend::Exact => exact::sample_reads(problem, num_reads, config, offsets),
    }
}

/// Sub-seed number `stream` of `master`, for seeding independent tasks.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng.next_u64()
}

/// `1 / (1 + exp(beta * field))`: probability a qubit reads 1.
pub fn response(beta: f64, field: f64) -> f64 {
    1.0 / (1.0 + (beta * field).exp())
}
