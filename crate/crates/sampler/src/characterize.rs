use std::sync::Arc;

use qbm_chimera::ChimeraTopology;
use qbm_ising::IsingProblem;
use serde::Serialize;

use crate::{
    coupling_metric, derive_seed, sample_reads, Backend, ExactModel, PairStats, SamplerConfig,
    SamplerError,
};

/// `-1, -1 + 1/steps, ..., 1`: `2 * steps + 1` evenly spaced values.
pub fn coefficient_sweep(steps_per_unit: u32) -> Vec<f64> {
    let s = i64::from(steps_per_unit.max(1));
    (-s..=s).map(|i| i as f64 / s as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QubitRow {
    pub coefficient: f64,
    pub mean_p1: f64,
    /// Population standard deviation of `P(1)` across active qubits.
    pub std_p1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingRow {
    pub coupling: f64,
    pub p11: f64,
    pub p10: f64,
    pub p01: f64,
    pub p00: f64,
    /// `None` when a joint cell is empty (saturated).
    pub metric: Option<f64>,
}

/// Sweep one common linear coefficient over every active qubit with all
/// couplings at zero, recording the response per step.
///
/// Step `k` samples with seed `derive_seed(config.seed, k)`. The exact backend
/// reports exact marginals instead of sampling.
pub fn characterize_qubits(
    topology: &Arc<ChimeraTopology>,
    backend: Backend,
    config: &SamplerConfig,
    coefficients: &[f64],
    reads: usize,
) -> Result<Vec<QubitRow>, SamplerError> {
    let active: Vec<usize> = topology.active_qubits().collect();
    let mut rows = Vec::with_capacity(coefficients.len());
    for (k, &b) in coefficients.iter().enumerate() {
        let mut problem = IsingProblem::new(topology.clone());
        problem.set_all_linear(&vec![b; topology.num_qubits()])?;
        let p = match backend {
            Backend::Gibbs => {
                let cfg = config.with_seed(derive_seed(config.seed, k as u64));
                sample_reads(backend, &problem, reads, &cfg, &[])?.marginals()
            }
            Backend::Exact => ExactModel::new(&problem, config)?.marginals(),
        };
        let n = active.len() as f64;
        let mean = active.iter().map(|&q| p[q]).sum::<f64>() / n;
        let var = active.iter().map(|&q| (p[q] - mean).powi(2)).sum::<f64>() / n;
        rows.push(QubitRow {
            coefficient: b,
            mean_p1: mean,
            std_p1: var.sqrt(),
        });
    }
    Ok(rows)
}

/// Least-squares fit of `1 / (1 + e^(k b))` to a qubit sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmoidFit {
    pub k: f64,
    /// Largest `|mean_p1 - fitted|` over the sweep.
    pub max_deviation: f64,
}

pub fn fit_sigmoid(rows: &[QubitRow]) -> SigmoidFit {
    let sse = |k: f64| {
        rows.iter()
            .map(|r| (r.mean_p1 - crate::response(k, r.coefficient)).powi(2))
            .sum::<f64>()
    };
    // Coarse grid, then golden-section refinement around the best cell.
    let grid: Vec<f64> = (1..=1000).map(|i| f64::from(i) * 0.05).collect();
    let best = grid
        .iter()
        .copied()
        .min_by(|a, b| sse(*a).total_cmp(&sse(*b)))
        .unwrap_or(1.0);
    let (mut lo, mut hi) = ((best - 0.05).max(1e-6), best + 0.05);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if sse(x1) < sse(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let k = 0.5 * (lo + hi);
    let max_deviation = rows
        .iter()
        .map(|r| (r.mean_p1 - crate::response(k, r.coefficient)).abs())
        .fold(0.0, f64::max);
    SigmoidFit { k, max_deviation }
}

/// Sweep the coupling of disjoint qubit pairs with all linear terms at zero,
/// pooling the pairs' joint statistics per step.
///
/// Gibbs steps pool read counts over all pairs (step `k` seeded with
/// `derive_seed(config.seed, k)`). The exact backend averages the pairs' exact
/// joint distributions.
pub fn characterize_coupling(
    topology: &Arc<ChimeraTopology>,
    backend: Backend,
    config: &SamplerConfig,
    pairs: &[(usize, usize)],
    couplings: &[f64],
    reads: usize,
) -> Result<Vec<CouplingRow>, SamplerError> {
    if pairs.is_empty() {
        return Err(SamplerError::InvalidArgument(
            "no qubit pairs to characterize".into(),
        ));
    }
    let mut used = vec![false; topology.num_qubits()];
    for &(a, b) in pairs {
        if topology.coupler_between(a, b).is_none() {
            return Err(SamplerError::InvalidArgument(format!(
                "({a}, {b}) is not an active coupler"
            )));
        }
        if used[a] || used[b] {
            return Err(SamplerError::InvalidArgument(format!(
                "pair ({a}, {b}) shares a qubit with another pair"
            )));
        }
        used[a] = true;
        used[b] = true;
    }

    let mut rows = Vec::with_capacity(couplings.len());
    for (k, &c) in couplings.iter().enumerate() {
        let mut problem = IsingProblem::new(topology.clone());
        for &(a, b) in pairs {
            problem.set_coupling(a, b, c)?;
        }
        let stats = match backend {
            Backend::Gibbs => {
                let cfg = config.with_seed(derive_seed(config.seed, k as u64));
                let r = sample_reads(backend, &problem, reads, &cfg, &[])?;
                let mut n = [0u64; 4];
                for &(a, b) in pairs {
                    for i in 0..r.num_reads() {
                        n[usize::from(r.get(i, a)) * 2 + usize::from(r.get(i, b))] += 1;
                    }
                }
                PairStats::from_counts(n[3], n[2], n[1], n[0])
            }
            Backend::Exact => {
                let model = ExactModel::new(&problem, config)?;
                let each = pairs
                    .iter()
                    .map(|&(a, b)| model.pair_stats(a, b))
                    .collect::<Result<Vec<_>, _>>()?;
                PairStats::mean(&each)
            }
        };
        rows.push(CouplingRow {
            coupling: c,
            p11: stats.p11,
            p10: stats.p10,
            p01: stats.p01,
            p00: stats.p00,
            metric: coupling_metric(&stats).ok(),
        });
    }
    Ok(rows)
}

/// Least-squares slope of the metric against the coupling over rows with
/// `lo <= coupling <= hi` and a finite metric.
pub fn metric_slope(rows: &[CouplingRow], lo: f64, hi: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.coupling >= lo && r.coupling <= hi)
        .filter_map(|r| r.metric.map(|m| (r.coupling, m)))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
