//! Concept rankers.
//!
//! Conditions are ranked at the bucket level by [`ConditionNetwork`] or one of
//! the [`OvrLrModel`] variants and expanded to entries with
//! [`rank_condition_terms`]. Symptoms are ranked at entry level from the chief
//! complaint and vitals. Labs and medications use structured-history counts.

mod dataset;
mod frequency;
mod logistic;
mod network;
mod ovr;
mod probe;
mod symptoms;
mod terms;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::{ConceptType, EntryIdx};

pub use dataset::{ConditionDataset, ConditionRow, SymptomDataset, SymptomRow};
pub use frequency::{rank_by_corpus_frequency, rank_frequency, rank_spell};
pub use logistic::{sigmoid, BinaryLr, LrConfig};
pub use network::{ConditionNetwork, Matrix, NetworkConfig, NetworkGradients, NetworkWeights};
pub use ovr::{OvrLrModel, OvrVariant, OvrConfig};
pub use probe::{linear_probe, lasso, LassoConfig, ProbeWeight};
pub use symptoms::{SymptomFeatures, SymptomLr, SymptomNb, SymptomTable};
pub use terms::{bucket_order, rank_condition_terms, TermKey};

#[derive(Debug, Error)]
pub enum RankingError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("empty training set")]
    EmptyDataset,
    #[error("degenerate probe set: logits are constant")]
    DegenerateProbe,
    #[error("bucket index {0} out of range")]
    UnknownBucket(usize),
    #[error(transparent)]
    Feature(#[from] crate::features::FeatureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub entry: EntryIdx,
    pub score: f64,
}

/// Entries of one concept type, best first. Scores are nonincreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub concept_type: ConceptType,
    pub items: Vec<RankedItem>,
}

impl RankedList {
    /// Sorts by score descending, then entry index ascending.
    pub fn from_scores(concept_type: ConceptType, scores: impl IntoIterator<Item = (EntryIdx, f64)>) -> Self {
        let mut items: Vec<RankedItem> = scores.into_iter().map(|(entry, score)| RankedItem { entry, score }).collect();
        items.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.entry.cmp(&b.entry)));
        Self { concept_type, items }
    }

    /// Keeps the given order; scores count down from `len`.
    pub fn from_order(concept_type: ConceptType, order: impl IntoIterator<Item = EntryIdx>) -> Self {
        let order: Vec<EntryIdx> = order.into_iter().collect();
        let n = order.len();
        let items = order.into_iter().enumerate().map(|(i, entry)| RankedItem { entry, score: (n - i) as f64 }).collect();
        Self { concept_type, items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = EntryIdx> + '_ {
        self.items.iter().map(|i| i.entry)
    }

    /// Zero-based position of every entry.
    pub fn positions(&self) -> HashMap<EntryIdx, usize> {
        self.entries().enumerate().map(|(i, e)| (e, i)).collect()
    }
}
