use std::collections::HashMap;

use qbm_ising::{state_energies, IsingProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{PairStats, ReadOffset, Reads, SamplerConfig, SamplerError};

/// Largest block of mutually coupled qubits the enumerator accepts.
pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone)]
struct Block {
    qubits: Vec<usize>,
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

/// Exact Boltzmann distribution of a problem.
///
/// Qubits are grouped into blocks joined by nonzero couplings. Blocks are
/// independent, so each is enumerated on its own and only the largest block
/// is bound by [`EXACT_LIMIT`].
#[derive(Debug, Clone)]
pub struct ExactModel {
    width: usize,
    blocks: Vec<Block>,
    /// For each qubit: (block, bit within block).
    place: Vec<Option<(usize, usize)>>,
}

impl ExactModel {
    pub fn new(problem: &IsingProblem, config: &SamplerConfig) -> Result<Self, SamplerError> {
        config.validate()?;
        Self::with_linear(problem, &config.effective_linear(problem), config.beta)
    }

    /// Like [`new`](Self::new) but with explicit linear coefficients.
    pub fn with_linear(
        problem: &IsingProblem,
        linear: &[f64],
        beta: f64,
    ) -> Result<Self, SamplerError> {
        let topo = problem.topology();
        let width = topo.num_qubits();
        let mut parent: Vec<usize> = (0..width).collect();
        fn root(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (c, &b) in topo.couplers().iter().zip(problem.quadratic()) {
            if b != 0.0 {
                let (ra, rb) = (root(&mut parent, c.a), root(&mut parent, c.b));
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); width];
        for q in topo.active_qubits() {
            let r = root(&mut parent, q);
            members[r].push(q);
        }

        let mut blocks = Vec::new();
        let mut place = vec![None; width];
        for qubits in members.into_iter().filter(|m| !m.is_empty()) {
            if qubits.len() > EXACT_LIMIT {
                return Err(SamplerError::Capacity {
                    size: qubits.len(),
                    limit: EXACT_LIMIT,
                });
            }
            let energies = state_energies(problem, &qubits, linear);
            let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
            let mut probs: Vec<f64> = energies.iter().map(|e| (-beta * (e - min)).exp()).collect();
            let z: f64 = probs.iter().sum();
            probs.iter_mut().for_each(|p| *p /= z);
            let mut acc = 0.0;
            let mut cdf: Vec<f64> = probs
                .iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect();
            *cdf.last_mut().expect("block is non-empty") = 1.0;
            for (bit, &q) in qubits.iter().enumerate() {
                place[q] = Some((blocks.len(), bit));
            }
            blocks.push(Block { qubits, probs, cdf });
        }
        Ok(Self {
            width,
            blocks,
            place,
        })
    }

    /// Exact `P(q_i = 1)` per qubit; masked qubits report 0.
    pub fn marginals(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.width];
        for b in &self.blocks {
            for (s, &p) in b.probs.iter().enumerate() {
                for (bit, &q) in b.qubits.iter().enumerate() {
                    if s >> bit & 1 == 1 {
                        m[q] += p;
                    }
                }
            }
        }
        m
    }

    /// Exact joint statistics of two active qubits.
    pub fn pair_stats(&self, a: usize, b: usize) -> Result<PairStats, SamplerError> {
        let locate =
            |q: usize| {
                self.place.get(q).copied().flatten().ok_or_else(|| {
                    SamplerError::InvalidArgument(format!("qubit {q} is not active"))
                })
            };
        let ((ba, bit_a), (bb, bit_b)) = (locate(a)?, locate(b)?);
        let mut cell = [[0.0f64; 2]; 2];
        if ba == bb {
            for (s, &p) in self.blocks[ba].probs.iter().enumerate() {
                cell[s >> bit_a & 1][s >> bit_b & 1] += p;
            }
        } else {
            let m = self.marginals();
            let (pa, pb) = (m[a], m[b]);
            cell = [
                [(1.0 - pa) * (1.0 - pb), (1.0 - pa) * pb],
                [pa * (1.0 - pb), pa * pb],
            ];
        }
        Ok(PairStats {
            p11: cell[1][1],
            p10: cell[1][0],
            p01: cell[0][1],
            p00: cell[0][0],
        })
    }

    /// Overwrite `q` with one exact draw.
    pub fn draw<R: Rng>(&self, rng: &mut R, q: &mut [u8]) {
        for b in &self.blocks {
            let u: f64 = rng.random();
            let s = b.cdf.partition_point(|&c| c <= u).min(b.cdf.len() - 1);
            for (bit, &i) in b.qubits.iter().enumerate() {
                q[i] = (s >> bit & 1) as u8;
            }
        }
    }
}

pub(crate) fn sample_reads(
    problem: &IsingProblem,
    num_reads: usize,
    config: &SamplerConfig,
    offsets: &[ReadOffset],
) -> Result<Reads, SamplerError> {
    let base = config.effective_linear(problem);
    let width = base.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut q = vec![0u8; width];
    let mut data = Vec::with_capacity(num_reads * width);

    if offsets.is_empty() {
        let model = ExactModel::with_linear(problem, &base, config.beta)?;
        for _ in 0..num_reads {
            model.draw(&mut rng, &mut q);
            data.extend_from_slice(&q);
        }
        return Ok(Reads::from_raw(width, data));
    }

    // Reads sharing the same offsets share a model.
    let mut models: HashMap<Vec<u64>, ExactModel> = HashMap::new();
    for r in 0..num_reads {
        let key: Vec<u64> = offsets.iter().map(|o| o.per_read[r].to_bits()).collect();
        if !models.contains_key(&key) {
            let mut lin = base.clone();
            for o in offsets {
                lin[o.qubit] += o.per_read[r];
            }
            models.insert(
                key.clone(),
                ExactModel::with_linear(problem, &lin, config.beta)?,
            );
        }
        models[&key].draw(&mut rng, &mut q);
        data.extend_from_slice(&q);
    }
    Ok(Reads::from_raw(width, data))
}
