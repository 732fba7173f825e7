use std::path::Path;
use std::sync::Arc;

use qbm_chimera::ChimeraTopology;
use qbm_ising::{Assignment, ProblemFile};
use qbm_mnist::{build_split, load_idx_pair, ExperimentSplit, LabeledImage};
use qbm_network::{
    score_images, score_seed, train_session, Checkpoint, Network, PassLog, SamplingPlan, ScoreRow,
    SessionReport, SetName,
};
use qbm_sampler::{coefficient_sweep, fit_sigmoid, CouplingRow, QubitRow, SigmoidFit};
use serde::Serialize;

use crate::output::{csv_with_header, write_atomic};
use crate::{CliError, RunConfig};

pub const CONFIG_FILE: &str = "config.toml";
pub const QUBITS_CSV: &str = "qubits.csv";
pub const COUPLING_CSV: &str = "coupling.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const PASSES_CSV: &str = "passes.csv";
pub const SCORES_CSV: &str = "scores.csv";
pub const SPLIT_FILE: &str = "split.toml";
pub const TEST_CSV: &str = "test_scores.csv";
pub const SAMPLES_CSV: &str = "samples.csv";

#[derive(Debug, Clone)]
pub struct QubitSummary {
    pub rows: Vec<QubitRow>,
    pub fit: SigmoidFit,
}

#[derive(Debug, Clone)]
pub struct CouplingSummary {
    pub rows: Vec<CouplingRow>,
    pub pairs: usize,
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub report: SessionReport,
    pub network: Network,
}

#[derive(Debug, Clone, Serialize)]
pub struct TestSummary {
    pub cycles: u64,
    pub set: SetName,
    pub top1: f64,
    pub top2: f64,
    pub top3: f64,
}

#[derive(Debug, Clone)]
pub struct SampleSummary {
    pub reads: usize,
    pub lowest: Assignment,
    pub lowest_energy: f64,
    /// Active qubits, in index order, for printing the lowest assignment.
    pub active: Vec<usize>,
}

fn write_config(cfg: &RunConfig) -> Result<(), CliError> {
    write_atomic(&cfg.out.join(CONFIG_FILE), cfg.to_toml()?.as_bytes())
}

fn topology(cfg: &RunConfig) -> Result<Arc<ChimeraTopology>, CliError> {
    ChimeraTopology::from_spec(&cfg.topology)
        .map(Arc::new)
        .map_err(|e| CliError::Config(e.to_string()))
}

/// Sweep a shared linear coefficient over the chip and fit the sigmoid.
pub fn characterize_qubits(cfg: &RunConfig) -> Result<QubitSummary, CliError> {
    let topo = topology(cfg)?;
    write_config(cfg)?;
    let c = &cfg.characterize;
    let coefficients = coefficient_sweep(c.qubit_steps_per_unit);
    let rows = qbm_sampler::characterize_qubits(
        &topo,
        cfg.backend,
        &cfg.sampler,
        &coefficients,
        c.qubit_reads,
    )?;
    let bytes = csv_with_header(&["coefficient", "mean_p1", "std_p1"], &rows)?;
    write_atomic(&cfg.out.join(QUBITS_CSV), &bytes)?;
    Ok(QubitSummary {
        fit: fit_sigmoid(&rows),
        rows,
    })
}

/// Sweep the coupling of up to `max_pairs` disjoint zero-bias pairs.
pub fn characterize_coupling(cfg: &RunConfig) -> Result<CouplingSummary, CliError> {
    let topo = topology(cfg)?;
    write_config(cfg)?;
    let mut pairs = topo.disjoint_couplers();
    pairs.truncate(cfg.characterize.max_pairs);
    let rows = qbm_sampler::characterize_coupling(
        &topo,
        cfg.backend,
        &cfg.sampler,
        &pairs,
        &cfg.coupling_values(),
        cfg.characterize.coupling_reads,
    )?;
    let bytes = csv_with_header(&["coupling", "p11", "p10", "p01", "p00", "metric"], &rows)?;
    write_atomic(&cfg.out.join(COUPLING_CSV), &bytes)?;
    Ok(CouplingSummary {
        rows,
        pairs: pairs.len(),
    })
}

fn load_split(cfg: &RunConfig) -> Result<ExperimentSplit, CliError> {
    let data = load_idx_pair(&cfg.data.images, &cfg.data.labels)?;
    Ok(build_split(
        &data,
        cfg.data.variant,
        cfg.seed,
        cfg.data.gray,
    )?)
}

fn check_monotone(rows: &[ScoreRow]) -> Result<(), CliError> {
    for r in rows {
        if !(r.top1 <= r.top2 && r.top2 <= r.top3 && r.top3 <= 1.0) {
            return Err(CliError::Other(format!("score row is not monotone: {r:?}")));
        }
    }
    Ok(())
}

/// Build the split, train, and write the checkpoint, split manifest and
/// score tables.
pub fn train(cfg: &RunConfig, progress: impl FnMut(&PassLog)) -> Result<TrainSummary, CliError> {
    write_config(cfg)?;
    let split = load_split(cfg)?;
    let pixels = split.training.first().map_or(0, |im| im.pixels.len());
    let mut network = Network::mnist(pixels, cfg.hidden_layout(), &cfg.train)?;
    let report = train_session(
        &mut network,
        &split,
        &cfg.train,
        cfg.backend,
        &cfg.sampler,
        progress,
    )?;
    check_monotone(&report.scores)?;

    let manifest = toml::to_string(&split.manifest).map_err(|e| CliError::Other(e.to_string()))?;
    write_atomic(&cfg.out.join(SPLIT_FILE), manifest.as_bytes())?;
    let ckpt = Checkpoint::from_network(&network).to_json()?;
    write_atomic(&cfg.out.join(CHECKPOINT_FILE), ckpt.as_bytes())?;
    let passes = csv_with_header(
        &["pass", "mean_abs_dw", "top1", "top2", "top3"],
        &report.log,
    )?;
    write_atomic(&cfg.out.join(PASSES_CSV), &passes)?;
    let scores = csv_with_header(&["pass", "set", "top1", "top2", "top3"], &report.scores)?;
    write_atomic(&cfg.out.join(SCORES_CSV), &scores)?;
    Ok(TrainSummary { report, network })
}

pub fn load_checkpoint(path: &Path) -> Result<Network, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(Checkpoint::from_json(&text)?.into_network()?)
}

/// Score one set of the configured split with a saved network.
pub fn test(cfg: &RunConfig) -> Result<TestSummary, CliError> {
    let path = cfg.test.checkpoint.as_ref().ok_or_else(|| {
        CliError::Config("no checkpoint given (use --checkpoint or test.checkpoint)".into())
    })?;
    write_config(cfg)?;
    let net = load_checkpoint(path)?;
    let split = load_split(cfg)?;
    let images: Vec<&LabeledImage> = match cfg.test.set {
        SetName::Training => split.training_digits(),
        SetName::Test => split.test.iter().collect(),
    };
    let plan = SamplingPlan::new(cfg.backend, cfg.sampler.clone(), cfg.train.reads_per_sample);
    let [top1, top2, top3] = score_images(
        &net,
        &images,
        cfg.train.schedule,
        &plan,
        score_seed(&cfg.train),
    )?;
    let summary = TestSummary {
        cycles: net.cycles(),
        set: cfg.test.set,
        top1,
        top2,
        top3,
    };
    let bytes = csv_with_header(
        &["cycles", "set", "top1", "top2", "top3"],
        std::slice::from_ref(&summary),
    )?;
    write_atomic(&cfg.out.join(TEST_CSV), &bytes)?;
    Ok(summary)
}

/// Sample a problem file and write every read with its energy.
pub fn sample(cfg: &RunConfig) -> Result<SampleSummary, CliError> {
    let path = cfg.sample.problem.as_ref().ok_or_else(|| {
        CliError::Config("no problem file given (use --problem or sample.problem)".into())
    })?;
    write_config(cfg)?;
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let file: ProblemFile = toml::from_str(&text).map_err(|e| CliError::Problem(e.to_string()))?;
    let problem = file.to_problem()?;
    let set = qbm_sampler::sample(cfg.backend, &problem, cfg.sample.reads, &cfg.sampler)?;
    let mut bytes = Vec::new();
    set.write_csv(&problem, &mut bytes)?;
    write_atomic(&cfg.out.join(SAMPLES_CSV), &bytes)?;
    let (lowest, lowest_energy) = set
        .lowest()
        .ok_or_else(|| CliError::Other("no reads".into()))?;
    Ok(SampleSummary {
        reads: set.num_reads(),
        lowest: lowest.clone(),
        lowest_energy,
        active: problem.topology().active_qubits().collect(),
    })
}
