use crate::{Assignment, IsingError, IsingProblem};

/// Largest active-qubit count [`ground_states`] will enumerate.
pub const GROUND_STATE_LIMIT: usize = 24;

/// Energy of every state of `qubits`, with all other qubits at 0.
///
/// State `s` sets `qubits[k]` to bit `k` of `s`. `linear` replaces the
/// problem's own linear coefficients (length `num_qubits`), which lets callers
/// fold in offsets. Runs in `O(2^n * degree)`.
pub fn state_energies(problem: &IsingProblem, qubits: &[usize], linear: &[f64]) -> Vec<f64> {
    let topo = problem.topology();
    let mut pos = vec![usize::MAX; topo.num_qubits()];
    for (k, &q) in qubits.iter().enumerate() {
        pos[q] = k;
    }
    // For bit k: couplings to lower bits inside the subset.
    let lower: Vec<Vec<(usize, f64)>> = qubits
        .iter()
        .enumerate()
        .map(|(k, &q)| {
            topo.adjacency(q)
                .iter()
                .filter(|&&(n, _)| pos[n] < k)
                .map(|&(n, id)| (pos[n], problem.quadratic()[id]))
                .collect()
        })
        .collect();

    let n = qubits.len();
    let mut e = vec![0.0; 1usize << n];
    for s in 1usize..(1 << n) {
        let k = usize::BITS as usize - 1 - s.leading_zeros() as usize;
        let rest = s ^ (1 << k);
        let mut v = e[rest] + linear[qubits[k]];
        for &(j, b) in &lower[k] {
            if rest >> j & 1 == 1 {
                v += b;
            }
        }
        e[s] = v;
    }
    e
}

/// Exact minimum energy and every minimizing assignment, by exhaustive
/// Gray-code enumeration of the active qubits.
pub fn ground_states(problem: &IsingProblem) -> Result<(f64, Vec<Assignment>), IsingError> {
    let topo = problem.topology();
    let qubits: Vec<usize> = topo.active_qubits().collect();
    let n = qubits.len();
    if n > GROUND_STATE_LIMIT {
        return Err(IsingError::Capacity {
            active: n,
            limit: GROUND_STATE_LIMIT,
        });
    }
    // Incremental updates accumulate rounding, so near-ties are collected
    // with a tolerance and re-scored exactly below.
    let tol = 1e-9 * (1.0 + problem.energy_bound());
    let mut q = vec![0u8; topo.num_qubits()];
    let mut energy = 0.0;
    let mut best = 0.0;
    let mut candidates: Vec<Vec<u8>> = vec![q.clone()];
    for step in 1u64..(1u64 << n) {
        let k = step.trailing_zeros() as usize;
        let i = qubits[k];
        let mut field = problem.linear()[i];
        for &(j, id) in topo.adjacency(i) {
            if q[j] == 1 {
                field += problem.quadratic()[id];
            }
        }
        if q[i] == 0 {
            q[i] = 1;
            energy += field;
        } else {
            q[i] = 0;
            energy -= field;
        }
        if energy < best - tol {
            best = energy;
            candidates.clear();
            candidates.push(q.clone());
        } else if energy <= best + tol {
            candidates.push(q.clone());
        }
    }

    let scored: Vec<(f64, Vec<u8>)> = candidates
        .into_iter()
        .map(|v| (problem.energy_unchecked(&v), v))
        .collect();
    let min = scored.iter().map(|(e, _)| *e).fold(f64::INFINITY, f64::min);
    let states = scored
        .into_iter()
        .filter(|(e, _)| *e <= min + tol)
        .map(|(_, v)| Assignment::new(v))
        .collect();
    Ok((min, states))
}
