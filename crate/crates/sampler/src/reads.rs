use qbm_ising::{Assignment, IsingError, IsingProblem, SampleSet};

use crate::PairStats;

/// Per-read additive offset on one qubit's linear coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadOffset {
    pub qubit: usize,
    /// One entry per read.
    pub per_read: Vec<f64>,
}

/// Reads stored row-major, one byte per qubit (masked qubits stay 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reads {
    width: usize,
    data: Vec<u8>,
}

impl Reads {
    pub(crate) fn from_raw(width: usize, data: Vec<u8>) -> Self {
        debug_assert_eq!(data.len() % width.max(1), 0);
        Self { width, data }
    }

    pub fn num_reads(&self) -> usize {
        self.data.len().checked_div(self.width).unwrap_or(0)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, r: usize) -> &[u8] {
        &self.data[r * self.width..(r + 1) * self.width]
    }

    /// Value of qubit `q` in read `r`.
    pub fn get(&self, r: usize, q: usize) -> u8 {
        self.data[r * self.width + q]
    }

    /// Per-qubit fraction of reads at 1.
    pub fn marginals(&self) -> Vec<f64> {
        let mut counts = vec![0u32; self.width];
        for row in self.data.chunks_exact(self.width) {
            for (c, &v) in counts.iter_mut().zip(row) {
                *c += u32::from(v);
            }
        }
        let n = self.num_reads() as f64;
        counts.into_iter().map(|c| f64::from(c) / n).collect()
    }

    /// Joint statistics of qubits `a` and `b` over all reads.
    pub fn pair_stats(&self, a: usize, b: usize) -> PairStats {
        let mut counts = [0u64; 4];
        for row in self.data.chunks_exact(self.width) {
            counts[usize::from(row[a]) * 2 + usize::from(row[b])] += 1;
        }
        PairStats::from_counts(counts[3], counts[2], counts[1], counts[0])
    }

    pub fn to_sample_set(&self, problem: &IsingProblem) -> Result<SampleSet, IsingError> {
        let assignments = self
            .data
            .chunks_exact(self.width)
            .map(|row| Assignment::new(row.to_vec()))
            .collect();
        SampleSet::new(problem, assignments)
    }
}
