//! MNIST digits for the desk-scale experiments.

mod idx;
mod split;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use idx::{load_idx_pair, parse_idx, read_maybe_gzip, IMAGE_MAGIC, LABEL_MAGIC};
pub use split::{build_split, ExperimentSplit, SplitManifest, Variant};

pub const CLASSES: usize = 10;

#[derive(Debug, Error)]
pub enum MnistError {
    #[error("bad magic number {found:#010x} at offset {offset} (expected {expected:#010x})")]
    BadMagic {
        offset: usize,
        expected: u32,
        found: u32,
    },
    #[error("truncated file: need {needed} bytes at offset {offset}, only {available} remain")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("{extra} unexpected trailing bytes at offset {offset}")]
    TrailingBytes { offset: usize, extra: usize },
    #[error("image file holds {images} items but label file holds {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("label {value} at offset {offset} is not a digit")]
    BadLabel { offset: usize, value: u8 },
    #[error("digit {digit} has {available} images, split needs {needed}")]
    NotEnoughImages {
        digit: usize,
        available: usize,
        needed: usize,
    },
    #[error("unsupported variant {0} (expected 50, 100 or 200)")]
    BadVariant(usize),
    #[error("manifest index {index} out of range for {len} images")]
    ManifestIndex { index: usize, len: usize },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl MnistError {
    /// Whether the error means "not enough data" rather than malformed input.
    pub fn is_capacity(&self) -> bool {
        matches!(self, Self::NotEnoughImages { .. })
    }
}

/// One image with its class flags. Noise images have every flag at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    /// Row-major brightness in `[0, 1]`.
    pub pixels: Vec<f64>,
    pub flags: [u8; CLASSES],
    pub is_noise: bool,
}

impl LabeledImage {
    pub fn digit(pixels: Vec<f64>, label: u8) -> Self {
        let mut flags = [0; CLASSES];
        flags[usize::from(label)] = 1;
        Self {
            pixels,
            flags,
            is_noise: false,
        }
    }

    pub fn noise(pixels: Vec<f64>) -> Self {
        Self {
            pixels,
            flags: [0; CLASSES],
            is_noise: true,
        }
    }

    pub fn label(&self) -> Option<usize> {
        self.flags.iter().position(|&f| f == 1)
    }

    pub fn flag_values(&self) -> [f64; CLASSES] {
        self.flags.map(f64::from)
    }
}

/// Pixel distribution of gray noise images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrayKind {
    /// Independent uniform `[0, 1)` per pixel.
    #[default]
    Uniform,
    /// Every pixel exactly 0.5.
    Constant,
}

/// `count` noise images of `pixels` pixels, reproducible from `seed`.
pub fn make_gray_images(
    count: usize,
    pixels: usize,
    seed: u64,
    kind: GrayKind,
) -> Vec<LabeledImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let px = match kind {
                GrayKind::Uniform => (0..pixels).map(|_| rng.random::<f64>()).collect(),
                GrayKind::Constant => vec![0.5; pixels],
            };
            LabeledImage::noise(px)
        })
        .collect()
}
