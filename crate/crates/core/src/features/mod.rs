//! Feature extraction from the patient context.

mod context;
mod ehr;
mod tfidf;
mod vitals;

use thiserror::Error;

pub use context::{EhrMention, HistoryCount, PatientContext, TriageVitals};
pub use ehr::{
    bucket_delay, delay_feature, delay_transform, ehr_presence_vector, fit_delay_rates, DelayFeature, DEFAULT_DELAY_RATE,
};
pub use tfidf::{ngram_terms, SparseVector, TfidfConfig, TfidfVocabulary};
pub use vitals::{
    bucketize_vital, most_abnormal_vital, AbnormalVital, PopulationStats, VitalBucket, VitalKind, VitalValue,
};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot fit on an empty corpus")]
    EmptyCorpus,
    #[error("negative or non-finite delay {0}")]
    NegativeDelay(f64),
    #[error("invalid value {value} for vital {name}")]
    InvalidVital { name: String, value: f64 },
    #[error("unknown ontology entry {0:?}")]
    UnknownEntry(String),
    #[error("unknown vital {0:?}")]
    UnknownVital(String),
    #[error("blood pressure needs both systolic and diastolic")]
    IncompletePressure,
}
