use std::fmt;
use std::str::FromStr;

use qbm_chimera::ChimeraTopology;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::SamplerError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Gibbs,
    Exact,
}

impl FromStr for Backend {
    type Err = SamplerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gibbs" => Ok(Self::Gibbs),
            "exact" => Ok(Self::Exact),
            other => Err(SamplerError::Config(format!(
                "unknown backend {other:?} (expected \"gibbs\" or \"exact\")"
            ))),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gibbs => "gibbs",
            Self::Exact => "exact",
        })
    }
}

/// Gaussian per-qubit offset added to every linear coefficient.
///
/// Offsets are drawn once per topology from `seed`, so a given qubit keeps
/// the same offset across every problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub std_dev: f64,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseModel {
    /// One offset per qubit index, masked qubits included.
    pub fn offsets(&self, topology: &ChimeraTopology) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let normal =
            Normal::new(0.0, self.std_dev).expect("std_dev validated as finite and non-negative");
        (0..topology.num_qubits())
            .map(|_| normal.sample(&mut rng))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    /// Inverse temperature.
    pub beta: f64,
    /// Full sweeps between recorded reads of one chain.
    pub sweeps_per_read: usize,
    /// Sweeps discarded at the start of each chain.
    pub burn_in_sweeps: usize,
    pub seed: u64,
    /// Independent chains the reads are split across. Each chain is seeded
    /// from `(seed, chain index)`, so output does not depend on thread count.
    pub chains: usize,
    /// Visit qubits in a fresh random order every sweep instead of index order.
    pub random_scan: bool,
    pub noise: Option<NoiseModel>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            beta: 7.0,
            sweeps_per_read: 20,
            burn_in_sweeps: 100,
            seed: 0,
            chains: 8,
            random_scan: false,
            noise: None,
        }
    }
}

impl SamplerConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(SamplerError::Config(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if self.sweeps_per_read == 0 {
            return Err(SamplerError::Config(
                "sweeps_per_read must be at least 1".into(),
            ));
        }
        if self.burn_in_sweeps == 0 {
            return Err(SamplerError::Config(
                "burn_in_sweeps must be at least 1".into(),
            ));
        }
        if self.chains == 0 {
            return Err(SamplerError::Config("chains must be at least 1".into()));
        }
        if let Some(n) = &self.noise {
            if !(n.std_dev.is_finite() && n.std_dev >= 0.0) {
                return Err(SamplerError::Config(format!(
                    "noise std_dev must be finite and non-negative, got {}",
                    n.std_dev
                )));
            }
        }
        Ok(())
    }

    /// Problem linear terms with noise offsets folded in.
    pub(crate) fn effective_linear(&self, problem: &qbm_ising::IsingProblem) -> Vec<f64> {
        let mut lin = problem.linear().to_vec();
        if let Some(noise) = &self.noise {
            for (l, o) in lin.iter_mut().zip(noise.offsets(problem.topology())) {
                *l += o;
            }
        }
        lin
    }
}
