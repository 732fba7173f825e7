use std::io::Write;

use crate::{Assignment, IsingError, IsingProblem};

/// Reads returned by a sampler, each with its recomputed energy.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    assignments: Vec<Assignment>,
    energies: Vec<f64>,
}

impl SampleSet {
    /// Validate every read and compute its energy.
    pub fn new(problem: &IsingProblem, assignments: Vec<Assignment>) -> Result<Self, IsingError> {
        let energies = assignments
            .iter()
            .map(|a| problem.energy(a))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            assignments,
            energies,
        })
    }

    pub fn num_reads(&self) -> usize {
        self.assignments.len()
    }

    pub fn assignments(&self) -> &[Assignment] {
        &self.assignments
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Lowest-energy read; the first one on ties.
    pub fn lowest(&self) -> Option<(&Assignment, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &e) in self.energies.iter().enumerate() {
            if best.is_none_or(|(_, b)| e < b) {
                best = Some((i, e));
            }
        }
        best.map(|(i, e)| (&self.assignments[i], e))
    }

    /// One CSV row per read: active qubit values (`q<index>` columns), then energy.
    pub fn write_csv<W: Write>(&self, problem: &IsingProblem, out: W) -> Result<(), IsingError> {
        let active: Vec<usize> = problem.topology().active_qubits().collect();
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = active.iter().map(|q| format!("q{q}")).collect();
        header.push("energy".into());
        w.write_record(&header)?;
        for (a, e) in self.assignments.iter().zip(&self.energies) {
            let mut row: Vec<String> = active.iter().map(|&q| a.get(q).to_string()).collect();
            row.push(format!("{e}"));
            w.write_record(&row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Per-qubit fraction of reads at 1. Masked qubits report 0.
pub fn expected_values(samples: &SampleSet) -> Result<Vec<f64>, IsingError> {
    let first = samples
        .assignments
        .first()
        .ok_or(IsingError::EmptySampleSet)?;
    let mut counts = vec![0u64; first.values().len()];
    for a in &samples.assignments {
        for (c, &v) in counts.iter_mut().zip(a.values()) {
            *c += u64::from(v);
        }
    }
    let n = samples.num_reads() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}
