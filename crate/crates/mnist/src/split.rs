use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{make_gray_images, GrayKind, LabeledImage, MnistError, CLASSES};

/// Experiment size: digits per set. Training adds one gray image per five digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub enum Variant {
    V50,
    V100,
    V200,
}

impl Variant {
    pub fn digits(self) -> usize {
        match self {
            Self::V50 => 50,
            Self::V100 => 100,
            Self::V200 => 200,
        }
    }

    pub fn gray_count(self) -> usize {
        self.digits() / 5
    }
}

impl TryFrom<usize> for Variant {
    type Error = MnistError;

    fn try_from(n: usize) -> Result<Self, MnistError> {
        match n {
            50 => Ok(Self::V50),
            100 => Ok(Self::V100),
            200 => Ok(Self::V200),
            other => Err(MnistError::BadVariant(other)),
        }
    }
}

impl From<Variant> for usize {
    fn from(v: Variant) -> usize {
        v.digits()
    }
}

/// Everything needed to rebuild a split from the same dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub variant: Variant,
    pub seed: u64,
    pub gray: GrayKind,
    pub gray_count: usize,
    /// Dataset indices of the training digits, grouped by class.
    pub train: Vec<usize>,
    /// Dataset indices of the test digits, grouped by class.
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSplit {
    pub variant: Variant,
    /// Training digits followed by gray images.
    pub training: Vec<LabeledImage>,
    pub test: Vec<LabeledImage>,
    pub manifest: SplitManifest,
}

impl ExperimentSplit {
    pub fn from_manifest(
        dataset: &[LabeledImage],
        manifest: &SplitManifest,
    ) -> Result<Self, MnistError> {
        let pick = |idx: &[usize]| {
            idx.iter()
                .map(|&i| {
                    dataset.get(i).cloned().ok_or(MnistError::ManifestIndex {
                        index: i,
                        len: dataset.len(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()
        };
        let mut training = pick(&manifest.train)?;
        let pixels = dataset.first().map_or(0, |im| im.pixels.len());
        training.extend(make_gray_images(
            manifest.gray_count,
            pixels,
            manifest.seed,
            manifest.gray,
        ));
        Ok(Self {
            variant: manifest.variant,
            training,
            test: pick(&manifest.test)?,
            manifest: manifest.clone(),
        })
    }

    /// Training entries with a class label (gray images excluded).
    pub fn training_digits(&self) -> Vec<&LabeledImage> {
        self.training.iter().filter(|im| !im.is_noise).collect()
    }
}

/// Class-balanced, disjoint train/test selection plus gray images.
///
/// Each set gets `digits / 10` images of every class (any remainder goes one
/// extra to the lowest classes). Within a class, dataset indices are shuffled
/// with `seed`; the first block trains, the next block tests.
pub fn build_split(
    dataset: &[LabeledImage],
    variant: Variant,
    seed: u64,
    gray: GrayKind,
) -> Result<ExperimentSplit, MnistError> {
    let n = variant.digits();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); CLASSES];
    for (i, im) in dataset.iter().enumerate() {
        if let Some(c) = im.label() {
            by_class[c].push(i);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for (c, idx) in by_class.iter_mut().enumerate() {
        let want = n / CLASSES + usize::from(c < n % CLASSES);
        if idx.len() < 2 * want {
            return Err(MnistError::NotEnoughImages {
                digit: c,
                available: idx.len(),
                needed: 2 * want,
            });
        }
        idx.shuffle(&mut rng);
        train.extend_from_slice(&idx[..want]);
        test.extend_from_slice(&idx[want..2 * want]);
    }
    let manifest = SplitManifest {
        variant,
        seed,
        gray,
        gray_count: variant.gray_count(),
        train,
        test,
    };
    ExperimentSplit::from_manifest(dataset, &manifest)
}
