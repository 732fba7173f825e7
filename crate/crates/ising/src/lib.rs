//! Binary quadratic objectives over a chimera graph.
//!
//! The objective is `E(q) = sum_i a_i q_i + sum_(i,j) b_ij q_i q_j` with every
//! `q_i` in `{0, 1}` and every coefficient in `[-1, 1]`.

mod enumerate;
mod file;
mod problem;
mod samples;

use thiserror::Error;

pub use enumerate::{ground_states, state_energies, GROUND_STATE_LIMIT};
pub use file::{LinearTerm, ProblemFile, QuadraticTerm};
pub use problem::{Assignment, IsingProblem};
pub use samples::{expected_values, SampleSet};

pub use qbm_chimera as chimera;

#[derive(Debug, Error)]
pub enum IsingError {
    #[error(transparent)]
    Topology(#[from] qbm_chimera::TopologyError),
    #[error("{what} = {value} is outside [-1, 1]")]
    CoefficientOutOfRange { what: String, value: f64 },
    #[error("qubits {a} and {b} are not joined by an active coupler")]
    NotACoupler { a: usize, b: usize },
    #[error("assignment has {got} values, topology has {expected} qubits")]
    AssignmentLength { expected: usize, got: usize },
    #[error("qubit {qubit} has non-binary value {value}")]
    NonBinary { qubit: usize, value: u8 },
    #[error("assignment is missing active qubit {0}")]
    MissingQubit(usize),
    #[error("sample set is empty")]
    EmptySampleSet,
    #[error("{active} active qubits exceed the exhaustive enumeration limit of {limit}")]
    Capacity { active: usize, limit: usize },
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}
