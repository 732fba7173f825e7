use std::fmt;

use qbm_mnist::{ExperimentSplit, LabeledImage, CLASSES};
use qbm_sampler::{derive_seed, Backend, SamplerConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::network::{Network, SamplingPlan};
use crate::{NetworkError, PresentationOrder, Schedule, TrainConfig};

const SCORE_STREAM: u64 = 1 << 48;
const ORDER_STREAM: u64 = 2 << 48;
const REST_STREAM: u64 = 3 << 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetName {
    Training,
    Test,
}

impl fmt::Display for SetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Training => "training",
            Self::Test => "test",
        })
    }
}

/// Recognition rates after `pass` passes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub pass: usize,
    pub set: SetName,
    pub top1: f64,
    pub top2: f64,
    pub top3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassLog {
    pub pass: usize,
    pub mean_abs_dw: f64,
    pub top1: f64,
    pub top2: f64,
    pub top3: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SessionReport {
    /// One row per pass, starting with the untrained network at pass 0.
    pub log: Vec<PassLog>,
    /// Training and test rows at pass 0, every `report_every` passes and the
    /// last pass.
    pub scores: Vec<ScoreRow>,
}

/// Fraction of labeled images whose label is within the first 1, 2, 3
/// choices. Image `i` is scored with seed `derive_seed(seed, i)`, so the
/// result depends only on the network and `seed`. Unlabeled images are
/// skipped.
pub fn score_images(
    net: &Network,
    images: &[&LabeledImage],
    schedule: Schedule,
    plan: &SamplingPlan,
    seed: u64,
) -> Result<[f64; 3], NetworkError> {
    let mut hits = [0usize; 3];
    let mut n = 0usize;
    for (i, im) in images.iter().enumerate() {
        let Some(label) = im.label() else { continue };
        let out = net.test_cycle(im, schedule, plan, derive_seed(seed, i as u64))?;
        for (k, h) in hits.iter_mut().enumerate() {
            *h += usize::from(out.within(label, k + 1));
        }
        n += 1;
    }
    if n == 0 {
        return Err(NetworkError::InvalidArgument(
            "no labeled images to score".into(),
        ));
    }
    Ok(hits.map(|h| h as f64 / n as f64))
}

/// Image order for one pass.
pub fn presentation_order(
    images: &[LabeledImage],
    order: PresentationOrder,
    pass: usize,
    seed: u64,
) -> Vec<usize> {
    match order {
        PresentationOrder::Given => (0..images.len()).collect(),
        PresentationOrder::Shuffled => {
            let mut idx: Vec<usize> = (0..images.len()).collect();
            idx.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(
                seed,
                ORDER_STREAM + pass as u64,
            )));
            idx
        }
        PresentationOrder::Interleaved => {
            let mut buckets = vec![Vec::new(); CLASSES + 1];
            for (i, im) in images.iter().enumerate() {
                buckets[im.label().unwrap_or(CLASSES)].push(i);
            }
            let longest = buckets.iter().map(Vec::len).max().unwrap_or(0);
            (0..longest)
                .flat_map(|k| buckets.iter().filter_map(move |b| b.get(k).copied()))
                .collect()
        }
    }
}

/// The seed used to score sets for a given training config.
pub fn score_seed(config: &TrainConfig) -> u64 {
    derive_seed(config.seed, SCORE_STREAM)
}

/// Calibrate rest values, then run `config.passes` passes over the training
/// set. Training digits are scored after every pass; the test set at the
/// reporting passes. `progress` sees each log row as it is produced.
pub fn train_session(
    net: &mut Network,
    split: &ExperimentSplit,
    config: &TrainConfig,
    backend: Backend,
    sampler: &SamplerConfig,
    mut progress: impl FnMut(&PassLog),
) -> Result<SessionReport, NetworkError> {
    config.validate()?;
    let plan = SamplingPlan::new(backend, sampler.clone(), config.reads_per_sample);
    net.calibrate_rest(&plan, derive_seed(config.seed, REST_STREAM))?;
    let train_digits = split.training_digits();
    let test: Vec<&LabeledImage> = split.test.iter().collect();
    let seed = score_seed(config);

    let mut report = SessionReport::default();
    let mut record = |report: &mut SessionReport,
                      net: &Network,
                      pass: usize,
                      dw: f64|
     -> Result<(), NetworkError> {
        let [top1, top2, top3] = score_images(net, &train_digits, config.schedule, &plan, seed)?;
        let row = PassLog {
            pass,
            mean_abs_dw: dw,
            top1,
            top2,
            top3,
        };
        progress(&row);
        report.log.push(row);
        if pass.is_multiple_of(config.report_every) || pass == config.passes {
            report.scores.push(ScoreRow {
                pass,
                set: SetName::Training,
                top1,
                top2,
                top3,
            });
            let [top1, top2, top3] = score_images(net, &test, config.schedule, &plan, seed)?;
            report.scores.push(ScoreRow {
                pass,
                set: SetName::Test,
                top1,
                top2,
                top3,
            });
        }
        Ok(())
    };

    record(&mut report, net, 0, 0.0)?;
    for pass in 1..=config.passes {
        let order = presentation_order(&split.training, config.order, pass, config.seed);
        let mut dw = 0.0;
        for &i in &order {
            dw += net.train_cycle(&split.training[i], config, backend, sampler)?;
        }
        record(&mut report, net, pass, dw / order.len().max(1) as f64)?;
    }
    Ok(report)
}
