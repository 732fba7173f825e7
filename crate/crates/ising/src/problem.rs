use std::collections::BTreeMap;
use std::sync::Arc;

use qbm_chimera::ChimeraTopology;

use crate::IsingError;

/// Coefficients of one objective over a topology.
///
/// `linear` has one slot per qubit (masked qubits stay 0); `quadratic` is
/// aligned with `topology.couplers()`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingProblem {
    topology: Arc<ChimeraTopology>,
    linear: Vec<f64>,
    quadratic: Vec<f64>,
}

fn check_range(what: impl FnOnce() -> String, value: f64) -> Result<(), IsingError> {
    if (-1.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(IsingError::CoefficientOutOfRange {
            what: what(),
            value,
        })
    }
}

impl IsingProblem {
    /// All-zero problem.
    pub fn new(topology: Arc<ChimeraTopology>) -> Self {
        let n = topology.num_qubits();
        let m = topology.couplers().len();
        Self {
            topology,
            linear: vec![0.0; n],
            quadratic: vec![0.0; m],
        }
    }

    pub fn with_terms(
        topology: Arc<ChimeraTopology>,
        linear: &[(usize, f64)],
        quadratic: &[(usize, usize, f64)],
    ) -> Result<Self, IsingError> {
        let mut p = Self::new(topology);
        for &(q, v) in linear {
            p.set_linear(q, v)?;
        }
        for &(a, b, v) in quadratic {
            p.set_coupling(a, b, v)?;
        }
        Ok(p)
    }

    pub fn topology(&self) -> &Arc<ChimeraTopology> {
        &self.topology
    }

    pub fn set_linear(&mut self, q: usize, value: f64) -> Result<(), IsingError> {
        self.topology.check_active(q)?;
        check_range(|| format!("a_{q}"), value)?;
        self.linear[q] = value;
        Ok(())
    }

    pub fn set_coupling(&mut self, a: usize, b: usize, value: f64) -> Result<(), IsingError> {
        self.topology.check_active(a)?;
        self.topology.check_active(b)?;
        let id = self
            .topology
            .coupler_between(a, b)
            .ok_or(IsingError::NotACoupler { a, b })?;
        check_range(|| format!("b_{}_{}", a.min(b), a.max(b)), value)?;
        self.quadratic[id] = value;
        Ok(())
    }

    /// Set every active qubit's linear coefficient at once.
    pub fn set_all_linear(&mut self, values: &[f64]) -> Result<(), IsingError> {
        if values.len() != self.linear.len() {
            return Err(IsingError::AssignmentLength {
                expected: self.linear.len(),
                got: values.len(),
            });
        }
        for q in self.topology.active_qubits() {
            check_range(|| format!("a_{q}"), values[q])?;
        }
        for q in self.topology.active_qubits() {
            self.linear[q] = values[q];
        }
        Ok(())
    }

    /// Set every active coupler's coefficient, in `topology.couplers()` order.
    pub fn set_all_quadratic(&mut self, values: &[f64]) -> Result<(), IsingError> {
        if values.len() != self.quadratic.len() {
            return Err(IsingError::AssignmentLength {
                expected: self.quadratic.len(),
                got: values.len(),
            });
        }
        for (c, &v) in self.topology.couplers().iter().zip(values) {
            check_range(|| format!("b_{}_{}", c.a, c.b), v)?;
        }
        self.quadratic.copy_from_slice(values);
        Ok(())
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn quadratic(&self) -> &[f64] {
        &self.quadratic
    }

    pub fn coupling(&self, a: usize, b: usize) -> Option<f64> {
        self.topology
            .coupler_between(a, b)
            .map(|id| self.quadratic[id])
    }

    pub fn has_couplings(&self) -> bool {
        self.quadratic.iter().any(|&b| b != 0.0)
    }

    /// `sum |a_i| + sum |b_ij|`, an upper bound on `|E|`.
    pub fn energy_bound(&self) -> f64 {
        self.linear.iter().map(|a| a.abs()).sum::<f64>()
            + self.quadratic.iter().map(|b| b.abs()).sum::<f64>()
    }

    pub fn energy(&self, assignment: &Assignment) -> Result<f64, IsingError> {
        assignment.validate(&self.topology)?;
        Ok(self.energy_unchecked(assignment.values()))
    }

    /// Energy of a dense 0/1 vector the caller already validated.
    pub fn energy_unchecked(&self, q: &[u8]) -> f64 {
        let mut e = 0.0;
        for i in self.topology.active_qubits() {
            if q[i] == 1 {
                e += self.linear[i];
            }
        }
        for (c, &b) in self.topology.couplers().iter().zip(&self.quadratic) {
            if q[c.a] == 1 && q[c.b] == 1 {
                e += b;
            }
        }
        e
    }
}

/// One binary value per qubit of a topology; masked qubits are ignored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment(Vec<u8>);

impl Assignment {
    pub fn new(values: Vec<u8>) -> Self {
        Self(values)
    }

    /// Build from `(qubit, value)` pairs, requiring every active qubit.
    pub fn from_map(
        topology: &ChimeraTopology,
        values: &BTreeMap<usize, u8>,
    ) -> Result<Self, IsingError> {
        let mut dense = vec![0u8; topology.num_qubits()];
        for q in topology.active_qubits() {
            dense[q] = *values.get(&q).ok_or(IsingError::MissingQubit(q))?;
        }
        for &q in values.keys() {
            topology.check_active(q)?;
        }
        let a = Self(dense);
        a.validate(topology)?;
        Ok(a)
    }

    pub fn values(&self) -> &[u8] {
        &self.0
    }

    pub fn get(&self, q: usize) -> u8 {
        self.0[q]
    }

    pub fn validate(&self, topology: &ChimeraTopology) -> Result<(), IsingError> {
        if self.0.len() != topology.num_qubits() {
            return Err(IsingError::AssignmentLength {
                expected: topology.num_qubits(),
                got: self.0.len(),
            });
        }
        for q in topology.active_qubits() {
            if self.0[q] > 1 {
                return Err(IsingError::NonBinary {
                    qubit: q,
                    value: self.0[q],
                });
            }
        }
        Ok(())
    }
}
