use std::sync::Arc;

use qbm_chimera::{ChimeraTopology, TopologySpec};
use serde::{Deserialize, Serialize};

use crate::{IsingError, IsingProblem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearTerm {
    pub qubit: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticTerm {
    pub a: usize,
    pub b: usize,
    pub value: f64,
}

/// Serializable problem: topology plus nonzero terms.
///
/// ```toml
/// [topology]
/// rows = 1
/// cols = 1
///
/// [[linear]]
/// qubit = 0
/// value = 0.5
///
/// [[quadratic]]
/// a = 0
/// b = 4
/// value = -1.0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub topology: TopologySpec,
    #[serde(default)]
    pub linear: Vec<LinearTerm>,
    #[serde(default)]
    pub quadratic: Vec<QuadraticTerm>,
}

impl ProblemFile {
    pub fn to_problem(&self) -> Result<IsingProblem, IsingError> {
        let topo = Arc::new(ChimeraTopology::from_spec(&self.topology)?);
        let linear: Vec<(usize, f64)> = self.linear.iter().map(|t| (t.qubit, t.value)).collect();
        let quadratic: Vec<(usize, usize, f64)> =
            self.quadratic.iter().map(|t| (t.a, t.b, t.value)).collect();
        IsingProblem::with_terms(topo, &linear, &quadratic)
    }

    pub fn from_problem(problem: &IsingProblem) -> Self {
        let topo = problem.topology();
        let linear = topo
            .active_qubits()
            .filter(|&q| problem.linear()[q] != 0.0)
            .map(|q| LinearTerm {
                qubit: q,
                value: problem.linear()[q],
            })
            .collect();
        let quadratic = topo
            .couplers()
            .iter()
            .zip(problem.quadratic())
            .filter(|(_, &v)| v != 0.0)
            .map(|(c, &v)| QuadraticTerm {
                a: c.a,
                b: c.b,
                value: v,
            })
            .collect();
        Self {
            topology: topo.spec(),
            linear,
            quadratic,
        }
    }
}
