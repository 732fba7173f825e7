use qbm_ising::IsingProblem;
use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{response, ReadOffset, Reads, SamplerConfig};

struct Prepared<'a> {
    width: usize,
    active: Vec<usize>,
    linear: Vec<f64>,
    /// Nonzero couplings per qubit.
    neighbors: Vec<Vec<(usize, f64)>>,
    /// Offsets touching each qubit, as indices into `offsets`.
    offset_ids: Vec<Vec<usize>>,
    offsets: &'a [ReadOffset],
    beta: f64,
}

impl Prepared<'_> {
    fn field(&self, i: usize, read: usize, q: &[u8]) -> f64 {
        let mut h = self.linear[i];
        for &k in &self.offset_ids[i] {
            h += self.offsets[k].per_read[read];
        }
        for &(j, b) in &self.neighbors[i] {
            if q[j] == 1 {
                h += b;
            }
        }
        h
    }
}

/// Split `num_reads` across chains and run them in parallel. Chain `c` owns a
/// contiguous block of reads and its own RNG stream, so the output is the same
/// for any thread count.
pub(crate) fn run(
    problem: &IsingProblem,
    num_reads: usize,
    config: &SamplerConfig,
    offsets: &[ReadOffset],
) -> Reads {
    let topo = problem.topology();
    let width = topo.num_qubits();
    let mut neighbors = vec![Vec::new(); width];
    for (c, &b) in topo.couplers().iter().zip(problem.quadratic()) {
        if b != 0.0 {
            neighbors[c.a].push((c.b, b));
            neighbors[c.b].push((c.a, b));
        }
    }
    let mut offset_ids = vec![Vec::new(); width];
    for (k, o) in offsets.iter().enumerate() {
        offset_ids[o.qubit].push(k);
    }
    let prep = Prepared {
        width,
        active: topo.active_qubits().collect(),
        linear: config.effective_linear(problem),
        neighbors,
        offset_ids,
        offsets,
        beta: config.beta,
    };

    let chains = config.chains.min(num_reads);
    let blocks: Vec<(usize, usize)> = (0..chains)
        .map(|c| (c * num_reads / chains, (c + 1) * num_reads / chains))
        .collect();
    let parts: Vec<Vec<u8>> = blocks
        .par_iter()
        .enumerate()
        .map(|(c, &(start, end))| {
            run_chain(
                &prep,
                config,
                c as u64,
                start,
                end,
                !problem.has_couplings(),
            )
        })
        .collect();
    Reads::from_raw(width, parts.concat())
}

fn run_chain(
    p: &Prepared,
    config: &SamplerConfig,
    chain: u64,
    start: usize,
    end: usize,
    decoupled: bool,
) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(chain);
    let mut q = vec![0u8; p.width];
    let mut out = Vec::with_capacity((end - start) * p.width);

    if decoupled {
        // Every conditional is already the exact marginal, so one draw per
        // qubit is an exact independent read; no burn-in or thinning needed.
        let plan: Vec<(usize, u64, bool)> = p
            .active
            .iter()
            .map(|&i| {
                (
                    i,
                    threshold(response(p.beta, p.linear[i])),
                    p.offset_ids[i].is_empty(),
                )
            })
            .collect();
        out.resize((end - start) * p.width, 0);
        let mut draws = vec![0u32; plan.len()];
        for (r, row) in (start..end).zip(out.chunks_exact_mut(p.width)) {
            rng.fill(&mut draws[..]);
            for (&(i, fixed, plain), &d) in plan.iter().zip(&draws) {
                let t = if plain {
                    fixed
                } else {
                    threshold(response(p.beta, p.field(i, r, row)))
                };
                row[i] = u8::from(u64::from(d) < t);
            }
        }
        return out;
    }

    for &i in &p.active {
        q[i] = u8::from(rng.random::<bool>());
    }
    let mut order = p.active.clone();
    let mut sweep = |q: &mut Vec<u8>, read: usize, rng: &mut ChaCha8Rng| {
        if config.random_scan {
            order.shuffle(rng);
        }
        for &i in &order {
            let t = threshold(response(p.beta, p.field(i, read, q)));
            q[i] = u8::from(u64::from(rng.next_u32()) < t);
        }
    };
    for _ in 0..config.burn_in_sweeps {
        sweep(&mut q, start, &mut rng);
    }
    for r in start..end {
        for _ in 0..config.sweeps_per_read {
            sweep(&mut q, r, &mut rng);
        }
        out.extend_from_slice(&q);
    }
    out
}

/// `prob` scaled to a 32-bit draw: a uniform `u32` is below it with
/// probability `prob` (to within 2^-32).
fn threshold(prob: f64) -> u64 {
    (prob * 4_294_967_296.0) as u64
}
