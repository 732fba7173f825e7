use serde::{Deserialize, Serialize};

use crate::layer::LayerSpec;
use crate::network::{InterLayerWeights, Network};
use crate::{InputScaling, NetworkError};

pub const CHECKPOINT_FORMAT: &str = "qbm-network";
pub const CHECKPOINT_VERSION: u32 = 1;

/// JSON snapshot of a network.
///
/// Holds the layer list (hidden layers carry their topology and tile grid),
/// every weight group, the rest values, and the seed plus cycle counter that
/// together fix all later random draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub cycles: u64,
    pub layers: Vec<LayerSpec>,
    pub weights: Vec<InterLayerWeights>,
    /// Per layer, per tile, per physical coupler. Empty for visible layers.
    pub intra: Vec<Vec<Vec<f64>>>,
    /// Per layer, per virtual coupler.
    #[serde(rename = "virtual")]
    pub virtual_w: Vec<Vec<f64>>,
    pub rest: Vec<Vec<f64>>,
    pub input_scaling: InputScaling,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

impl Checkpoint {
    pub fn from_network(net: &Network) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            seed: net.seed,
            cycles: net.cycles,
            layers: net.layers.clone(),
            weights: net.weights.clone(),
            intra: net.intra.clone(),
            virtual_w: net.virtual_w.clone(),
            rest: net.rest.clone(),
            input_scaling: net.input_scaling,
        }
    }

    pub fn into_network(self) -> Result<Network, NetworkError> {
        let links = self.weights.iter().map(|g| (g.from, g.to)).collect();
        let mut net = Network::assemble(self.layers, links, self.seed)?;
        net.restore(
            self.weights,
            self.intra,
            self.virtual_w,
            self.rest,
            self.cycles,
        )?;
        net.input_scaling = self.input_scaling;
        Ok(net)
    }

    pub fn to_json(&self) -> Result<String, NetworkError> {
        Ok(serde_json::to_string(self)?)
    }

    /// Parse, rejecting other formats and versions before reading the body.
    pub fn from_json(text: &str) -> Result<Self, NetworkError> {
        let h: Header = serde_json::from_str(text)?;
        if h.format != CHECKPOINT_FORMAT || h.version != CHECKPOINT_VERSION {
            return Err(NetworkError::Checkpoint {
                found: h.format,
                version: h.version,
                expected: CHECKPOINT_FORMAT,
                supported: CHECKPOINT_VERSION,
            });
        }
        Ok(serde_json::from_str(text)?)
    }
}
