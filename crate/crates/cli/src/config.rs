use std::path::{Path, PathBuf};

use qbm_chimera::TopologySpec;
use qbm_mnist::{GrayKind, Variant};
use qbm_network::{Backend, HiddenLayout, SamplerConfig, SetName, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything a command needs, loaded from TOML and then overridden by flags.
///
/// `seed` is the master seed: on resolution it is copied into
/// `sampler.seed` and `train.seed`, and it also picks the data split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub backend: Backend,
    /// Output directory.
    pub out: PathBuf,
    /// Physical topology: the characterization chip and one hidden tile.
    pub topology: TopologySpec,
    pub sampler: SamplerConfig,
    pub characterize: CharacterizeConfig,
    pub data: DataConfig,
    pub hidden: TileGrid,
    pub train: TrainConfig,
    pub test: TestConfig,
    pub sample: SampleConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            backend: Backend::Gibbs,
            out: PathBuf::from("qbm-out"),
            topology: TopologySpec::default(),
            sampler: SamplerConfig::default(),
            characterize: CharacterizeConfig::default(),
            data: DataConfig::default(),
            hidden: TileGrid::default(),
            train: TrainConfig::default(),
            test: TestConfig::default(),
            sample: SampleConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CharacterizeConfig {
    /// Qubit sweep runs over `-1..=1` in steps of `1 / qubit_steps_per_unit`.
    pub qubit_steps_per_unit: u32,
    pub qubit_reads: usize,
    pub coupling_min: f64,
    pub coupling_max: f64,
    pub coupling_steps_per_unit: u32,
    pub coupling_reads: usize,
    /// Upper bound on the disjoint qubit pairs pooled per coupling step.
    pub max_pairs: usize,
}

impl Default for CharacterizeConfig {
    fn default() -> Self {
        Self {
            qubit_steps_per_unit: 64,
            qubit_reads: 10_000,
            coupling_min: -1.0,
            coupling_max: 1.0,
            coupling_steps_per_unit: 16,
            coupling_reads: 2_000,
            max_pairs: 222,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// IDX image file, optionally gzip-compressed.
    pub images: PathBuf,
    pub labels: PathBuf,
    pub variant: Variant,
    pub gray: GrayKind,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            images: PathBuf::from("data/mnist/t10k-images-idx3-ubyte.gz"),
            labels: PathBuf::from("data/mnist/t10k-labels-idx1-ubyte.gz"),
            variant: Variant::V50,
            gray: GrayKind::Uniform,
        }
    }
}

/// How many copies of `topology` form the hidden layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TileGrid {
    pub tile_rows: usize,
    pub tile_cols: usize,
}

impl Default for TileGrid {
    fn default() -> Self {
        Self {
            tile_rows: 2,
            tile_cols: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestConfig {
    pub checkpoint: Option<PathBuf>,
    pub set: SetName,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            checkpoint: None,
            set: SetName::Test,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    /// TOML problem file.
    pub problem: Option<PathBuf>,
    pub reads: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            problem: None,
            reads: 1000,
        }
    }
}

/// Command-line values that replace config entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub backend: Option<Backend>,
    pub variant: Option<usize>,
    pub passes: Option<usize>,
    pub out: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub set: Option<SetName>,
    pub problem: Option<PathBuf>,
    pub reads: Option<usize>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Read `path` (defaults when absent), apply overrides and resolve seeds.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("reading {}: {e}", p.display())))?;
                Self::from_toml(&text)?
            }
            None => Self::default(),
        };
        cfg.apply(overrides)?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(b) = o.backend {
            self.backend = b;
        }
        if let Some(v) = o.variant {
            self.data.variant =
                Variant::try_from(v).map_err(|e| CliError::Config(e.to_string()))?;
        }
        if let Some(p) = o.passes {
            self.train.passes = p;
        }
        if let Some(out) = &o.out {
            self.out.clone_from(out);
        }
        if let Some(c) = &o.checkpoint {
            self.test.checkpoint = Some(c.clone());
        }
        if let Some(s) = o.set {
            self.test.set = s;
        }
        if let Some(p) = &o.problem {
            self.sample.problem = Some(p.clone());
        }
        if let Some(r) = o.reads {
            self.sample.reads = r;
        }
        Ok(())
    }

    /// Propagate the master seed and validate every section.
    pub fn resolve(&mut self) -> Result<(), CliError> {
        self.sampler.seed = self.seed;
        self.train.seed = self.seed;
        self.sampler
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.train
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let c = &self.characterize;
        if c.qubit_steps_per_unit == 0 || c.coupling_steps_per_unit == 0 {
            return Err(CliError::Config(
                "sweep steps per unit must be at least 1".into(),
            ));
        }
        if c.qubit_reads == 0 || c.coupling_reads == 0 || self.sample.reads == 0 {
            return Err(CliError::Config("read counts must be at least 1".into()));
        }
        if !(c.coupling_min <= c.coupling_max && c.coupling_min >= -1.0 && c.coupling_max <= 1.0) {
            return Err(CliError::Config(format!(
                "coupling range [{}, {}] must lie within [-1, 1]",
                c.coupling_min, c.coupling_max
            )));
        }
        if c.max_pairs == 0 {
            return Err(CliError::Config("max_pairs must be at least 1".into()));
        }
        if self.hidden.tile_rows == 0 || self.hidden.tile_cols == 0 {
            return Err(CliError::Config(
                "hidden tile grid must be at least 1x1".into(),
            ));
        }
        Ok(())
    }

    pub fn hidden_layout(&self) -> HiddenLayout {
        HiddenLayout {
            topology: self.topology.clone(),
            tile_rows: self.hidden.tile_rows,
            tile_cols: self.hidden.tile_cols,
        }
    }

    /// `[lo, hi]` on a grid of `1 / steps` (both ends included when on grid).
    pub fn coupling_values(&self) -> Vec<f64> {
        let c = &self.characterize;
        let s = f64::from(c.coupling_steps_per_unit);
        let lo = (c.coupling_min * s - 1e-9).ceil() as i64;
        let hi = (c.coupling_max * s + 1e-9).floor() as i64;
        (lo..=hi).map(|i| i as f64 / s).collect()
    }
}
