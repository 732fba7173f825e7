use serde::{Deserialize, Serialize};

use crate::NetworkError;

/// Which visible layers keep their initial values during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VisibleClamp {
    /// Every visible layer is recomputed in phase 2.
    None,
    /// Input layers (the image) hold the data; output layers (flags) are free.
    #[default]
    Inputs,
    /// Every visible layer holds its initial values.
    All,
}

/// Update order inside one phase-1/2 iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    /// Every layer reads the previous iteration's expectations.
    Parallel,
    /// Hidden layers update together first, then visible layers update
    /// together from the fresh hidden values.
    #[default]
    Alternating,
}

/// Order training images are presented within a pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresentationOrder {
    /// As stored in the training set.
    Given,
    /// Round-robin over classes, noise images treated as one more class.
    #[default]
    Interleaved,
    /// A fresh seeded permutation every pass.
    Shuffled,
}

/// How image pixels become input-unit values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputScaling {
    /// Brightness in `[0, 1]` as stored.
    Brightness,
    /// Brightness rescaled so the image has this Euclidean norm, then
    /// clipped at 1.
    Norm(f64),
}

impl Default for InputScaling {
    fn default() -> Self {
        Self::Norm(8.0)
    }
}

impl InputScaling {
    pub fn apply(&self, pixels: &[f64]) -> Vec<f64> {
        match *self {
            Self::Brightness => pixels.to_vec(),
            Self::Norm(target) => {
                let n = pixels.iter().map(|p| p * p).sum::<f64>().sqrt();
                if n == 0.0 {
                    return pixels.to_vec();
                }
                pixels.iter().map(|p| (p * target / n).min(1.0)).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// `k` in `dw = k (e_i e_j - f_i f_j)`.
    pub learning_rate: f64,
    pub phase12_iterations: usize,
    pub reads_per_sample: usize,
    pub passes: usize,
    pub clamp: VisibleClamp,
    pub schedule: Schedule,
    /// Inter-layer weights start uniform in `[-range, range]`.
    pub weight_init_range: f64,
    /// Subtract column then row means from each initial weight matrix.
    pub center_init: bool,
    /// Also update intra-chimera couplings of hidden layers.
    pub train_intra: bool,
    pub input_scaling: InputScaling,
    pub order: PresentationOrder,
    pub report_every: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            phase12_iterations: 2,
            reads_per_sample: 1000,
            passes: 30,
            clamp: VisibleClamp::Inputs,
            schedule: Schedule::Alternating,
            weight_init_range: 1.0,
            center_init: true,
            train_intra: false,
            input_scaling: InputScaling::default(),
            order: PresentationOrder::Interleaved,
            report_every: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NetworkError> {
        let bad = |m: String| Err(NetworkError::InvalidArgument(m));
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad(format!(
                "learning_rate must be >= 0, got {}",
                self.learning_rate
            ));
        }
        if self.phase12_iterations < 2 {
            return bad(format!(
                "phase12_iterations must be at least 2, got {}",
                self.phase12_iterations
            ));
        }
        if self.reads_per_sample == 0 {
            return bad("reads_per_sample must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.weight_init_range) {
            return bad(format!(
                "weight_init_range must lie in [0, 1], got {}",
                self.weight_init_range
            ));
        }
        if let InputScaling::Norm(n) = self.input_scaling {
            if !(n.is_finite() && n > 0.0) {
                return bad(format!("input norm must be positive, got {n}"));
            }
        }
        if self.report_every == 0 {
            return bad("report_every must be at least 1".into());
        }
        Ok(())
    }
}
