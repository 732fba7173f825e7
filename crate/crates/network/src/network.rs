use qbm_ising::IsingProblem;
use qbm_mnist::{LabeledImage, CLASSES};
use qbm_sampler::{
    derive_seed, sample_reads, Backend, PairStats, ReadOffset, Reads, SamplerConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::layer::{HiddenLayout, LayerKind, LayerSpec, Tiling, VisibleRole};
use crate::{InputScaling, NetworkError, Schedule, TrainConfig, VisibleClamp};

/// Steepness of the measured qubit response, shared by visible units.
pub const RESPONSE_STEEPNESS: f64 = 7.0;

const INIT_STREAM: u64 = 1 << 40;
const SYNTH_STREAM: u64 = 1 << 32;
/// Tolerance on the `[-1, 1]` bias bound for accumulated rounding.
const BOUND_SLACK: f64 = 1e-9;

/// Expected value of a visible unit with bias `b`: `1 / (1 + e^(7b))`.
pub fn phase2_visible(bias: f64) -> f64 {
    1.0 / (1.0 + (RESPONSE_STEEPNESS * bias).exp())
}

/// Mean of per-layer contributions. Each contribution is already the average
/// of `w_ij e_j` over its layer, so every layer weighs the same.
pub fn average_bias(contributions: &[f64]) -> Result<f64, NetworkError> {
    if contributions.is_empty() {
        return Err(NetworkError::InvalidState(
            "unit has no connected layers".into(),
        ));
    }
    Ok(contributions.iter().sum::<f64>() / contributions.len() as f64)
}

/// `clamp(w + k (e_i e_j - f_i f_j), -1, 1)`.
pub fn eq5_delta(w: f64, e_i: f64, e_j: f64, f_i: f64, f_j: f64, k: f64) -> f64 {
    (w + k * (e_i * e_j - f_i * f_j)).clamp(-1.0, 1.0)
}

/// Indices sorted by descending value; ties keep the lower index first.
pub fn rank_flags(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

/// Dense weights between two layers, row-major over `from` units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterLayerWeights {
    pub from: usize,
    pub to: usize,
    pub rows: usize,
    pub cols: usize,
    pub w: Vec<f64>,
}

impl InterLayerWeights {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) -> Result<(), NetworkError> {
        check_weight(value)?;
        if i >= self.rows || j >= self.cols {
            return Err(NetworkError::InvalidArgument(format!(
                "weight ({i}, {j}) outside a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        self.w[i * self.cols + j] = value;
        Ok(())
    }

    /// Subtract column means, then row means, then clip to `[-1, 1]`.
    fn double_center(&mut self) {
        let (r, c) = (self.rows, self.cols);
        for j in 0..c {
            let m = (0..r).map(|i| self.w[i * c + j]).sum::<f64>() / r as f64;
            for i in 0..r {
                self.w[i * c + j] -= m;
            }
        }
        for row in self.w.chunks_exact_mut(c) {
            let m = row.iter().sum::<f64>() / c as f64;
            for v in row {
                *v = (*v - m).clamp(-1.0, 1.0);
            }
        }
    }
}

fn check_weight(value: f64) -> Result<(), NetworkError> {
    if (-1.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(NetworkError::InvalidArgument(format!(
            "weight {value} outside [-1, 1]"
        )))
    }
}

/// Backend, sampler settings and read count for hidden-layer sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    pub backend: Backend,
    pub sampler: SamplerConfig,
    pub reads: usize,
}

impl SamplingPlan {
    pub fn new(backend: Backend, sampler: SamplerConfig, reads: usize) -> Self {
        Self {
            backend,
            sampler,
            reads,
        }
    }
}

/// Per-cycle unit state. Kept apart from the weights so scoring never
/// mutates a network.
#[derive(Debug, Clone, PartialEq)]
pub struct Activity {
    pub expected: Vec<Vec<f64>>,
    /// Expected values saved after the first phase-1/2 iteration; empty
    /// until then.
    pub snapshot_f: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
    /// Latest reads of every tile of each hidden layer.
    tile_reads: Vec<Vec<Reads>>,
}

impl Activity {
    pub fn tile_reads(&self, layer: usize) -> &[Reads] {
        &self.tile_reads[layer]
    }
}

/// Ranked flags of one test cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub flags: Vec<f64>,
    pub ranking: Vec<usize>,
}

impl TestOutcome {
    /// Whether `label` is among the first `n` choices.
    pub fn within(&self, label: usize, n: usize) -> bool {
        self.ranking.iter().take(n).any(|&c| c == label)
    }
}

#[derive(Debug, Default, Clone)]
pub struct NetworkBuilder {
    layers: Vec<LayerSpec>,
    links: Vec<(usize, usize)>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn visible(mut self, name: &str, size: usize, role: VisibleRole) -> Self {
        self.layers.push(LayerSpec {
            name: name.into(),
            kind: LayerKind::Visible { size, role },
        });
        self
    }

    pub fn hidden(mut self, name: &str, layout: HiddenLayout) -> Self {
        self.layers.push(LayerSpec {
            name: name.into(),
            kind: LayerKind::Hidden(layout),
        });
        self
    }

    /// Fully connect layers `a` and `b`.
    pub fn connect(mut self, a: usize, b: usize) -> Self {
        self.links.push((a, b));
        self
    }

    /// A network with every weight at zero.
    pub fn build(self, seed: u64) -> Result<Network, NetworkError> {
        Network::assemble(self.layers, self.links, seed)
    }
}

/// Layers, weights and the cycle counter that drives seeding.
#[derive(Debug, Clone)]
pub struct Network {
    pub(crate) layers: Vec<LayerSpec>,
    sizes: Vec<usize>,
    tilings: Vec<Option<Tiling>>,
    pub(crate) weights: Vec<InterLayerWeights>,
    /// Per hidden layer, per tile: intra-chimera couplings aligned with the
    /// topology's coupler list.
    pub(crate) intra: Vec<Vec<Vec<f64>>>,
    /// Per hidden layer: weights aligned with its virtual couplers.
    pub(crate) virtual_w: Vec<Vec<f64>>,
    /// Starting expected values of free units.
    pub(crate) rest: Vec<Vec<f64>>,
    /// Per layer: `(weight group, layer is the row side)`.
    links: Vec<Vec<(usize, bool)>>,
    /// Per layer, per unit: `(neighbor unit, virtual coupler)`.
    virtual_adj: Vec<Vec<Vec<(usize, usize)>>>,
    pub(crate) input_scaling: InputScaling,
    pub(crate) seed: u64,
    pub(crate) cycles: u64,
}

impl Network {
    pub(crate) fn assemble(
        layers: Vec<LayerSpec>,
        pairs: Vec<(usize, usize)>,
        seed: u64,
    ) -> Result<Self, NetworkError> {
        if layers.is_empty() {
            return Err(NetworkError::InvalidArgument(
                "network needs at least one layer".into(),
            ));
        }
        let mut sizes = Vec::new();
        let mut tilings = Vec::new();
        for l in &layers {
            match &l.kind {
                LayerKind::Visible { size, .. } => {
                    if *size == 0 {
                        return Err(NetworkError::InvalidArgument(format!(
                            "layer {:?} is empty",
                            l.name
                        )));
                    }
                    sizes.push(*size);
                    tilings.push(None);
                }
                LayerKind::Hidden(layout) => {
                    let t = Tiling::new(layout)?;
                    if t.num_units() == 0 {
                        return Err(NetworkError::InvalidArgument(format!(
                            "layer {:?} has no active qubits",
                            l.name
                        )));
                    }
                    sizes.push(t.num_units());
                    tilings.push(Some(t));
                }
            }
        }
        let mut weights = Vec::new();
        let mut links = vec![Vec::new(); layers.len()];
        for &(a, b) in &pairs {
            if a >= layers.len() || b >= layers.len() || a == b {
                return Err(NetworkError::InvalidArgument(format!(
                    "cannot connect layers {a} and {b}"
                )));
            }
            if weights
                .iter()
                .any(|g: &InterLayerWeights| (g.from, g.to) == (a, b) || (g.from, g.to) == (b, a))
            {
                return Err(NetworkError::InvalidArgument(format!(
                    "layers {a} and {b} connected twice"
                )));
            }
            links[a].push((weights.len(), true));
            links[b].push((weights.len(), false));
            weights.push(InterLayerWeights {
                from: a,
                to: b,
                rows: sizes[a],
                cols: sizes[b],
                w: vec![0.0; sizes[a] * sizes[b]],
            });
        }
        let mut intra = Vec::new();
        let mut virtual_w = Vec::new();
        let mut virtual_adj = Vec::new();
        let mut rest = Vec::new();
        for (l, t) in tilings.iter().enumerate() {
            rest.push(vec![0.5; sizes[l]]);
            match t {
                Some(t) => {
                    intra.push(vec![
                        vec![0.0; t.topology().couplers().len()];
                        t.num_tiles()
                    ]);
                    virtual_w.push(vec![0.0; t.virtual_couplers().len()]);
                    let mut adj = vec![Vec::new(); sizes[l]];
                    for (k, vc) in t.virtual_couplers().iter().enumerate() {
                        adj[vc.a].push((vc.b, k));
                        adj[vc.b].push((vc.a, k));
                    }
                    virtual_adj.push(adj);
                }
                None => {
                    intra.push(Vec::new());
                    virtual_w.push(Vec::new());
                    virtual_adj.push(vec![Vec::new(); sizes[l]]);
                }
            }
        }
        Ok(Self {
            layers,
            sizes,
            tilings,
            weights,
            intra,
            virtual_w,
            rest,
            links,
            virtual_adj,
            input_scaling: InputScaling::Brightness,
            seed,
            cycles: 0,
        })
    }

    /// Image, hidden, flags (10), with the hidden layer connected to both
    /// visible layers. Weights and input scaling come from `config`.
    pub fn mnist(
        pixels: usize,
        layout: HiddenLayout,
        config: &TrainConfig,
    ) -> Result<Self, NetworkError> {
        let mut net = NetworkBuilder::new()
            .visible("image", pixels, VisibleRole::Input)
            .hidden("hidden", layout)
            .visible("flags", CLASSES, VisibleRole::Output)
            .connect(0, 1)
            .connect(1, 2)
            .build(config.seed)?;
        net.input_scaling = config.input_scaling;
        net.init_weights(config.weight_init_range, config.center_init)?;
        Ok(net)
    }

    /// Seeded uniform `[-range, range]` inter-layer weights, optionally
    /// double-centered. Intra and virtual couplings are reset to zero.
    pub fn init_weights(&mut self, range: f64, center: bool) -> Result<(), NetworkError> {
        if !(0.0..=1.0).contains(&range) {
            return Err(NetworkError::InvalidArgument(format!(
                "init range {range} outside [0, 1]"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, INIT_STREAM));
        for g in &mut self.weights {
            for v in &mut g.w {
                *v = if range > 0.0 {
                    rng.random_range(-range..=range)
                } else {
                    0.0
                };
            }
            if center {
                g.double_center();
            }
        }
        for tiles in &mut self.intra {
            for t in tiles {
                t.fill(0.0);
            }
        }
        for v in &mut self.virtual_w {
            v.fill(0.0);
        }
        Ok(())
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layer_size(&self, layer: usize) -> usize {
        self.sizes[layer]
    }

    pub fn tiling(&self, layer: usize) -> Option<&Tiling> {
        self.tilings[layer].as_ref()
    }

    pub fn weights(&self) -> &[InterLayerWeights] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [InterLayerWeights] {
        &mut self.weights
    }

    /// Intra-chimera couplings of tile `tile` of a hidden layer.
    pub fn intra(&self, layer: usize, tile: usize) -> &[f64] {
        &self.intra[layer][tile]
    }

    pub fn set_intra(
        &mut self,
        layer: usize,
        tile: usize,
        coupler: usize,
        value: f64,
    ) -> Result<(), NetworkError> {
        check_weight(value)?;
        let slot = self
            .intra
            .get_mut(layer)
            .and_then(|t| t.get_mut(tile))
            .and_then(|c| c.get_mut(coupler))
            .ok_or_else(|| {
                NetworkError::InvalidArgument(format!(
                    "no coupler {coupler} in tile {tile} of layer {layer}"
                ))
            })?;
        *slot = value;
        Ok(())
    }

    pub fn virtual_weights(&self, layer: usize) -> &[f64] {
        &self.virtual_w[layer]
    }

    pub fn set_virtual_weight(
        &mut self,
        layer: usize,
        coupler: usize,
        value: f64,
    ) -> Result<(), NetworkError> {
        check_weight(value)?;
        let slot = self
            .virtual_w
            .get_mut(layer)
            .and_then(|v| v.get_mut(coupler))
            .ok_or_else(|| {
                NetworkError::InvalidArgument(format!(
                    "no virtual coupler {coupler} in layer {layer}"
                ))
            })?;
        *slot = value;
        Ok(())
    }

    /// Starting expected values of a layer's free units.
    pub fn rest(&self, layer: usize) -> &[f64] {
        &self.rest[layer]
    }

    pub fn input_scaling(&self) -> InputScaling {
        self.input_scaling
    }

    pub fn set_input_scaling(&mut self, scaling: InputScaling) {
        self.input_scaling = scaling;
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Training cycles run so far.
    pub fn cycles(&self) -> u64 {
        self.cycles
    }

    /// Every trainable weight: inter-layer, intra-chimera and virtual.
    pub fn all_weights(&self) -> impl Iterator<Item = f64> + '_ {
        let inter = self.weights.iter().flat_map(|g| g.w.iter().copied());
        let intra = self.intra.iter().flatten().flatten().copied();
        let virt = self.virtual_w.iter().flatten().copied();
        inter.chain(intra).chain(virt)
    }

    fn index_of(&self, role: VisibleRole) -> Result<usize, NetworkError> {
        let mut found = self
            .layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l.kind, LayerKind::Visible { role: r, .. } if r == role));
        match (found.next(), found.next()) {
            (Some((i, _)), None) => Ok(i),
            _ => Err(NetworkError::InvalidArgument(format!(
                "network must have exactly one {role:?} visible layer"
            ))),
        }
    }

    /// Layer indices of the image and flag layers.
    pub fn io_layers(&self) -> Result<(usize, usize), NetworkError> {
        Ok((
            self.index_of(VisibleRole::Input)?,
            self.index_of(VisibleRole::Output)?,
        ))
    }

    /// Fresh activity: `data` layers hold their values, everything else
    /// starts at its rest value.
    pub fn activity(&self, data: &[(usize, &[f64])]) -> Result<Activity, NetworkError> {
        let mut expected = self.rest.clone();
        for &(l, values) in data {
            if l >= self.sizes.len() || values.len() != self.sizes[l] {
                return Err(NetworkError::InvalidArgument(format!(
                    "layer {l} expects {} values, got {}",
                    self.sizes.get(l).copied().unwrap_or(0),
                    values.len()
                )));
            }
            if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(NetworkError::InvalidArgument(format!(
                    "value {v} for layer {l} outside [0, 1]"
                )));
            }
            expected[l] = values.to_vec();
        }
        Ok(Activity {
            bias: self.sizes.iter().map(|&n| vec![0.0; n]).collect(),
            expected,
            snapshot_f: Vec::new(),
            tile_reads: vec![Vec::new(); self.sizes.len()],
        })
    }

    fn is_hidden(&self, layer: usize) -> bool {
        self.tilings[layer].is_some()
    }

    /// Sum of per-layer contributions, and number of contributing groups,
    /// for every unit of `layer`. Virtual neighbors are not included.
    fn inter_sums(&self, expected: &[Vec<f64>], layer: usize) -> (Vec<f64>, usize) {
        let n = self.sizes[layer];
        let mut total = vec![0.0; n];
        for &(g, row_side) in &self.links[layer] {
            let w = &self.weights[g];
            if row_side {
                let e = &expected[w.to];
                for (i, t) in total.iter_mut().enumerate() {
                    let row = &w.w[i * w.cols..(i + 1) * w.cols];
                    *t += row.iter().zip(e).map(|(a, b)| a * b).sum::<f64>() / w.cols as f64;
                }
            } else {
                let e = &expected[w.from];
                let mut acc = vec![0.0; n];
                for (i, &ei) in e.iter().enumerate() {
                    if ei != 0.0 {
                        for (a, &wij) in acc.iter_mut().zip(&w.w[i * w.cols..(i + 1) * w.cols]) {
                            *a += wij * ei;
                        }
                    }
                }
                for (t, a) in total.iter_mut().zip(acc) {
                    *t += a / w.rows as f64;
                }
            }
        }
        (total, self.links[layer].len())
    }

    /// Phase 1 for one layer: average over connected layers (and virtual
    /// neighbors, as one more group) of the mean `w e` each contributes.
    pub fn compute_bias(&self, act: &Activity, layer: usize) -> Result<Vec<f64>, NetworkError> {
        let (mut total, groups) = self.inter_sums(&act.expected, layer);
        let vw = &self.virtual_w[layer];
        for (i, t) in total.iter_mut().enumerate() {
            let adj = &self.virtual_adj[layer][i];
            let mut count = groups;
            if !adj.is_empty() {
                let e = &act.expected[layer];
                *t += adj.iter().map(|&(j, k)| vw[k] * e[j]).sum::<f64>() / adj.len() as f64;
                count += 1;
            }
            if count == 0 {
                return Err(NetworkError::InvalidState(format!(
                    "unit {i} of layer {layer} has no connected layers"
                )));
            }
            *t /= count as f64;
            if t.abs() > 1.0 + BOUND_SLACK || !t.is_finite() {
                return Err(NetworkError::InvalidState(format!(
                    "bias {t} of unit {i} in layer {layer} outside [-1, 1]"
                )));
            }
        }
        Ok(total)
    }

    /// Phase 2 for a hidden layer: one Ising problem per tile, sampled tile
    /// by tile.
    ///
    /// Virtual neighbors enter each read as a per-read offset built from the
    /// neighbor's value in the same read index: from this round's reads for
    /// tiles already sampled, otherwise from the previous round's reads, or
    /// drawn from its expected value when no reads exist yet. The offset is
    /// weighted exactly like the mean-field term in [`Network::compute_bias`].
    pub fn phase2_hidden(
        &self,
        act: &mut Activity,
        layer: usize,
        plan: &SamplingPlan,
        seed: u64,
    ) -> Result<(), NetworkError> {
        let tiling = self.tilings[layer]
            .as_ref()
            .ok_or_else(|| NetworkError::InvalidArgument(format!("layer {layer} is not hidden")))?;
        let (inter, groups) = self.inter_sums(&act.expected, layer);
        let n = tiling.units_per_tile();
        let vw = &self.virtual_w[layer];
        let adj = &self.virtual_adj[layer];
        let count = |i: usize| (groups + usize::from(!adj[i].is_empty())).max(1) as f64;

        let previous = std::mem::take(&mut act.tile_reads[layer]);
        let reuse_previous = previous.len() == tiling.num_tiles()
            && previous.iter().all(|r| r.num_reads() == plan.reads);
        let mut synth_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, SYNTH_STREAM));
        let mut fresh: Vec<Reads> = Vec::with_capacity(tiling.num_tiles());
        let mut expected = act.expected[layer].clone();

        for t in 0..tiling.num_tiles() {
            let mut problem = IsingProblem::new(tiling.topology().clone());
            let mut linear = vec![0.0; tiling.topology().num_qubits()];
            let mut offsets = Vec::new();
            for (s, &q) in tiling.tile_qubits().iter().enumerate() {
                let i = t * n + s;
                linear[q] = (inter[i] / count(i)).clamp(-1.0, 1.0);
                let live: Vec<(usize, f64)> = adj[i]
                    .iter()
                    .filter(|&&(_, k)| vw[k] != 0.0)
                    .map(|&(j, k)| (j, vw[k]))
                    .collect();
                if live.is_empty() {
                    continue;
                }
                let scale = 1.0 / (adj[i].len() as f64 * count(i));
                let mut per_read = vec![0.0; plan.reads];
                for &(j, w) in &live {
                    let (tj, qj) = tiling.locate(j);
                    for (r, p) in per_read.iter_mut().enumerate() {
                        let v = if tj < t {
                            fresh[tj].get(r, qj)
                        } else if reuse_previous {
                            previous[tj].get(r, qj)
                        } else {
                            u8::from(synth_rng.random::<f64>() < act.expected[layer][j])
                        };
                        *p += w * scale * f64::from(v);
                    }
                }
                offsets.push(ReadOffset { qubit: q, per_read });
            }
            problem.set_all_linear(&linear)?;
            problem.set_all_quadratic(&self.intra[layer][t])?;
            let sampler = plan.sampler.with_seed(derive_seed(seed, t as u64));
            let reads = sample_reads(plan.backend, &problem, plan.reads, &sampler, &offsets)?;
            let m = reads.marginals();
            for (s, &q) in tiling.tile_qubits().iter().enumerate() {
                expected[t * n + s] = m[q];
            }
            fresh.push(reads);
        }
        act.expected[layer] = expected;
        act.tile_reads[layer] = fresh;
        Ok(())
    }

    /// Joint read statistics of two units of a hidden layer, pairing reads
    /// by index (units may sit in different tiles).
    pub fn pair_stats(
        &self,
        act: &Activity,
        layer: usize,
        a: usize,
        b: usize,
    ) -> Result<PairStats, NetworkError> {
        let tiling = self.tilings[layer]
            .as_ref()
            .ok_or_else(|| NetworkError::InvalidArgument(format!("layer {layer} is not hidden")))?;
        let reads = &act.tile_reads[layer];
        if reads.is_empty() {
            return Err(NetworkError::InvalidState(format!(
                "layer {layer} has not been sampled"
            )));
        }
        let ((ta, qa), (tb, qb)) = (tiling.locate(a), tiling.locate(b));
        let mut c = [0u64; 4];
        for r in 0..reads[ta].num_reads() {
            c[usize::from(reads[ta].get(r, qa)) * 2 + usize::from(reads[tb].get(r, qb))] += 1;
        }
        Ok(PairStats::from_counts(c[3], c[2], c[1], c[0]))
    }

    fn phase2_layers(
        &self,
        act: &mut Activity,
        layers: &[usize],
        biases: Vec<Vec<f64>>,
        plan: &SamplingPlan,
        seed: u64,
    ) -> Result<(), NetworkError> {
        for (&l, b) in layers.iter().zip(biases) {
            if self.is_hidden(l) {
                self.phase2_hidden(act, l, plan, derive_seed(seed, l as u64))?;
            } else {
                act.expected[l] = b.iter().map(|&x| phase2_visible(x)).collect();
            }
            act.bias[l] = b;
        }
        Ok(())
    }

    /// One phase-1/2 iteration over every layer not in `clamped`.
    pub fn iterate(
        &self,
        act: &mut Activity,
        clamped: &[bool],
        schedule: Schedule,
        plan: &SamplingPlan,
        seed: u64,
    ) -> Result<(), NetworkError> {
        let free: Vec<usize> = (0..self.sizes.len()).filter(|&l| !clamped[l]).collect();
        let groups: Vec<Vec<usize>> = match schedule {
            Schedule::Parallel => vec![free],
            Schedule::Alternating => {
                let (h, v): (Vec<usize>, Vec<usize>) =
                    free.into_iter().partition(|&l| self.is_hidden(l));
                vec![h, v]
            }
        };
        for group in groups {
            let biases = group
                .iter()
                .map(|&l| self.compute_bias(act, l))
                .collect::<Result<Vec<_>, _>>()?;
            self.phase2_layers(act, &group, biases, plan, seed)?;
        }
        Ok(())
    }

    /// Which layers hold their initial values during training.
    pub fn clamp_mask(&self, clamp: VisibleClamp) -> Vec<bool> {
        self.layers
            .iter()
            .map(|l| match (&l.kind, clamp) {
                (LayerKind::Hidden(_), _) | (_, VisibleClamp::None) => false,
                (LayerKind::Visible { role, .. }, VisibleClamp::Inputs) => {
                    *role == VisibleRole::Input
                }
                (LayerKind::Visible { .. }, VisibleClamp::All) => true,
            })
            .collect()
    }

    /// Phase 3: move every trained weight by `k (e_i e_j - f_i f_j)` and clip.
    /// Returns the mean absolute change.
    pub fn phase3_update(
        &mut self,
        e: &[Vec<f64>],
        f: &[Vec<f64>],
        k: f64,
        train_intra: bool,
    ) -> Result<f64, NetworkError> {
        for (name, snap) in [("e", e), ("f", f)] {
            if snap.len() != self.sizes.len()
                || snap.iter().zip(&self.sizes).any(|(s, &n)| s.len() != n)
            {
                return Err(NetworkError::InvalidState(format!(
                    "missing or mis-sized {name} snapshot"
                )));
            }
        }
        // Returns |actual change|.
        let apply = |w: &mut f64, ei: f64, ej: f64, fi: f64, fj: f64| {
            let new = eq5_delta(*w, ei, ej, fi, fj, k);
            let d = (new - *w).abs();
            *w = new;
            d
        };
        let mut total = 0.0;
        let mut count = 0usize;
        for g in &mut self.weights {
            let (ea, eb, fa, fb) = (&e[g.from], &e[g.to], &f[g.from], &f[g.to]);
            count += g.w.len();
            for i in 0..g.rows {
                if ea[i] == 0.0 && fa[i] == 0.0 {
                    // Both products vanish: the row is unchanged.
                    continue;
                }
                let row = &mut g.w[i * g.cols..(i + 1) * g.cols];
                for (j, w) in row.iter_mut().enumerate() {
                    total += apply(w, ea[i], eb[j], fa[i], fb[j]);
                }
            }
        }
        for (l, tiling) in self.tilings.iter().enumerate() {
            let Some(tiling) = tiling else { continue };
            for (vc, w) in tiling.virtual_couplers().iter().zip(&mut self.virtual_w[l]) {
                total += apply(w, e[l][vc.a], e[l][vc.b], f[l][vc.a], f[l][vc.b]);
                count += 1;
            }
            if train_intra {
                let couplers = tiling.topology().couplers();
                for (t, tile) in self.intra[l].iter_mut().enumerate() {
                    for (c, w) in couplers.iter().zip(tile.iter_mut()) {
                        let (a, b) = (
                            tiling.unit(t, c.a).expect("coupler endpoints are active"),
                            tiling.unit(t, c.b).expect("coupler endpoints are active"),
                        );
                        total += apply(w, e[l][a], e[l][b], f[l][a], f[l][b]);
                        count += 1;
                    }
                }
            }
        }
        Ok(if count == 0 {
            0.0
        } else {
            total / count as f64
        })
    }

    /// One training cycle on explicit layer data. Returns the mean `|dw|`.
    pub fn train_cycle_with(
        &mut self,
        data: &[(usize, &[f64])],
        config: &TrainConfig,
        backend: Backend,
        sampler: &SamplerConfig,
    ) -> Result<f64, NetworkError> {
        config.validate()?;
        let seed = derive_seed(self.seed, self.cycles);
        let plan = SamplingPlan::new(backend, sampler.clone(), config.reads_per_sample);
        let clamped = self.clamp_mask(config.clamp);
        let mut act = self.activity(data)?;
        for it in 0..config.phase12_iterations {
            self.iterate(
                &mut act,
                &clamped,
                config.schedule,
                &plan,
                derive_seed(seed, it as u64),
            )?;
            if it == 0 {
                act.snapshot_f = act.expected.clone();
            }
        }
        let dw = self.phase3_update(
            &act.expected,
            &act.snapshot_f,
            config.learning_rate,
            config.train_intra,
        )?;
        self.cycles += 1;
        Ok(dw)
    }

    /// Training cycle on one labeled image: scaled pixels into the input
    /// layer, flags (all zero for noise images) into the output layer.
    pub fn train_cycle(
        &mut self,
        image: &LabeledImage,
        config: &TrainConfig,
        backend: Backend,
        sampler: &SamplerConfig,
    ) -> Result<f64, NetworkError> {
        let (input, output) = self.io_layers()?;
        let pixels = self.input_scaling.apply(&image.pixels);
        let flags = image.flag_values();
        self.train_cycle_with(
            &[(input, &pixels), (output, &flags)],
            config,
            backend,
            sampler,
        )
    }

    /// Image held at the scaled pixels, flags started at zero, one phase-1/2
    /// iteration; flags ranked by expected value.
    pub fn test_cycle(
        &self,
        image: &LabeledImage,
        schedule: Schedule,
        plan: &SamplingPlan,
        seed: u64,
    ) -> Result<TestOutcome, NetworkError> {
        let (input, output) = self.io_layers()?;
        let zeros = vec![0.0; self.sizes[output]];
        let pixels = self.input_scaling.apply(&image.pixels);
        let mut act = self.activity(&[(input, &pixels), (output, &zeros)])?;
        let clamped: Vec<bool> = (0..self.sizes.len()).map(|l| l == input).collect();
        self.iterate(&mut act, &clamped, schedule, plan, seed)?;
        let flags = act.expected[output].clone();
        Ok(TestOutcome {
            ranking: rank_flags(&flags),
            flags,
        })
    }

    /// Measure zero-problem marginals of every hidden tile and use them as
    /// starting expected values.
    pub fn calibrate_rest(&mut self, plan: &SamplingPlan, seed: u64) -> Result<(), NetworkError> {
        for l in 0..self.sizes.len() {
            let Some(tiling) = &self.tilings[l] else {
                continue;
            };
            let n = tiling.units_per_tile();
            let problem = IsingProblem::new(tiling.topology().clone());
            for t in 0..tiling.num_tiles() {
                let sampler = plan
                    .sampler
                    .with_seed(derive_seed(seed, (l * tiling.num_tiles() + t) as u64));
                let m =
                    sample_reads(plan.backend, &problem, plan.reads, &sampler, &[])?.marginals();
                for (s, &q) in tiling.tile_qubits().iter().enumerate() {
                    self.rest[l][t * n + s] = m[q];
                }
            }
        }
        Ok(())
    }

    pub(crate) fn restore(
        &mut self,
        weights: Vec<InterLayerWeights>,
        intra: Vec<Vec<Vec<f64>>>,
        virtual_w: Vec<Vec<f64>>,
        rest: Vec<Vec<f64>>,
        cycles: u64,
    ) -> Result<(), NetworkError> {
        let bad = |what: &str| {
            Err(NetworkError::InvalidState(format!(
                "checkpoint {what} do not match the layer layout"
            )))
        };
        if weights.len() != self.weights.len()
            || weights.iter().zip(&self.weights).any(|(a, b)| {
                (a.from, a.to, a.rows, a.cols) != (b.from, b.to, b.rows, b.cols)
                    || a.w.len() != b.w.len()
            })
        {
            return bad("weights");
        }
        let shape3 = |v: &Vec<Vec<Vec<f64>>>| {
            v.iter()
                .map(|t| t.iter().map(Vec::len).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        };
        if shape3(&intra) != shape3(&self.intra) {
            return bad("intra couplings");
        }
        let shape2 = |v: &Vec<Vec<f64>>| v.iter().map(Vec::len).collect::<Vec<_>>();
        if shape2(&virtual_w) != shape2(&self.virtual_w) {
            return bad("virtual couplings");
        }
        if shape2(&rest) != shape2(&self.rest) {
            return bad("rest values");
        }
        let all = weights
            .iter()
            .flat_map(|g| g.w.iter())
            .chain(intra.iter().flatten().flatten())
            .chain(virtual_w.iter().flatten());
        for &v in all {
            check_weight(v)?;
        }
        self.weights = weights;
        self.intra = intra;
        self.virtual_w = virtual_w;
        self.rest = rest;
        self.cycles = cycles;
        Ok(())
    }
}
