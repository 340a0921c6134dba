use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::features::{delay_transform, SparseVector, TfidfVocabulary, DEFAULT_DELAY_RATE};
use crate::ranking::dataset::{ConditionDataset, ConditionRow};
use crate::ranking::logistic::{BinaryLr, LrConfig};
use crate::ranking::RankingError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OvrVariant {
    /// Triage text only, trained against randomly sampled negatives.
    TextOnly,
    /// Triage text, trained on rows whose history holds the bucket.
    TextEhr,
    /// As `TextEhr` with the transformed delay since the last mention.
    TextEhrDelay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OvrConfig {
    pub lr: LrConfig,
    /// Leak probability for buckets absent from the history.
    pub epsilon: f64,
    /// Buckets with fewer positive rows are not fitted.
    pub min_positives: usize,
    /// Negatives sampled per positive for [`OvrVariant::TextOnly`].
    pub negative_ratio: f64,
    pub seed: u64,
}

impl Default for OvrConfig {
    fn default() -> Self {
        Self { lr: LrConfig::default(), epsilon: 1e-4, min_positives: 10, negative_ratio: 1.0, seed: 11 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvrLrModel {
    pub variant: OvrVariant,
    pub config: OvrConfig,
    pub vocab: TfidfVocabulary,
    pub output_buckets: Vec<usize>,
    /// Fitted model per output bucket; `None` when too few positives.
    pub models: Vec<Option<BinaryLr>>,
    pub epsilon: Vec<f64>,
    /// Fraction of training rows whose history holds the bucket.
    pub prior: Vec<f64>,
    /// Exponential rate of the delay transform (delay variant only).
    pub delay_rate: Vec<f64>,
}

impl OvrLrModel {
    pub fn train(dataset: &ConditionDataset, variant: OvrVariant, config: OvrConfig) -> Result<Self, RankingError> {
        let rows = &dataset.rows;
        if rows.is_empty() {
            return Err(RankingError::EmptyDataset);
        }
        let n = rows.len() as f64;
        let outputs = dataset.condition_buckets.clone();
        let prior: Vec<f64> =
            outputs.iter().map(|&b| rows.iter().filter(|r| r.has_bucket(b)).count() as f64 / n).collect();
        let delay_rate: Vec<f64> = outputs
            .iter()
            .map(|&b| {
                let ds: Vec<f64> = rows.iter().filter_map(|r| r.delays.get(&b).copied()).collect();
                let mean = ds.iter().sum::<f64>() / ds.len().max(1) as f64;
                if ds.is_empty() || mean <= 0.0 {
                    DEFAULT_DELAY_RATE
                } else {
                    1.0 / mean
                }
            })
            .collect();
        let dim = dataset.vocab.len() + usize::from(variant == OvrVariant::TextEhrDelay);

        let models: Vec<Option<BinaryLr>> = outputs
            .par_iter()
            .enumerate()
            .map(|(k, &b)| -> Result<Option<BinaryLr>, RankingError> {
                let selected: Vec<&ConditionRow> = match variant {
                    OvrVariant::TextOnly => {
                        let pos: Vec<&ConditionRow> = rows.iter().filter(|r| r.is_target(b)).collect();
                        let neg: Vec<&ConditionRow> = rows.iter().filter(|r| !r.is_target(b)).collect();
                        let want = ((pos.len() as f64 * config.negative_ratio).round() as usize).min(neg.len());
                        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(b as u64));
                        pos.into_iter().chain(neg.choose_multiple(&mut rng, want).copied()).collect()
                    }
                    _ => rows.iter().filter(|r| r.has_bucket(b)).collect(),
                };
                let positives = selected.iter().filter(|r| r.is_target(b)).count();
                if positives < config.min_positives {
                    log::info!("bucket {b}: {positives} positive rows, scored by prior only");
                    return Ok(None);
                }
                let feats: Vec<SparseVector> =
                    selected.iter().map(|r| Self::features(variant, &dataset.vocab, delay_rate[k], b, r)).collect();
                let labelled: Vec<(&SparseVector, bool)> =
                    feats.iter().zip(&selected).map(|(x, r)| (x, r.is_target(b))).collect();
                Ok(Some(BinaryLr::fit(&labelled, dim, config.lr)?))
            })
            .collect::<Result<_, _>>()?;

        Ok(Self {
            variant,
            config,
            vocab: dataset.vocab.clone(),
            epsilon: vec![config.epsilon; outputs.len()],
            output_buckets: outputs,
            models,
            prior,
            delay_rate,
        })
    }

    fn features(variant: OvrVariant, vocab: &TfidfVocabulary, rate: f64, bucket: usize, row: &ConditionRow) -> SparseVector {
        match (variant, row.delays.get(&bucket)) {
            (OvrVariant::TextEhrDelay, Some(&d)) => {
                let u = delay_transform(d, rate).unwrap_or(0.0);
                SparseVector::from_pairs(
                    row.text.iter().map(|(i, w)| (i as u32, w)).chain(std::iter::once((vocab.len() as u32, u))),
                )
            }
            _ => row.text.clone(),
        }
    }

    /// `(bucket index, score)` for every output bucket.
    pub fn bucket_scores(&self, row: &ConditionRow) -> Vec<(usize, f64)> {
        self.output_buckets
            .iter()
            .enumerate()
            .map(|(k, &b)| {
                let leak = self.epsilon[k] * self.prior[k];
                let score = match (&self.models[k], self.variant) {
                    (None, _) => leak,
                    (Some(m), OvrVariant::TextOnly) => m.predict(&row.text),
                    (Some(m), _) if row.has_bucket(b) => {
                        m.predict(&Self::features(self.variant, &self.vocab, self.delay_rate[k], b, row)) * self.prior[k]
                    }
                    (Some(_), _) => leak,
                };
                (b, score)
            })
            .collect()
    }
}
