//! Ranking metrics, keystroke replay and corpus reports.

mod metrics;
mod replay;
mod report;
mod stats;

use thiserror::Error;

pub use metrics::{map_score, mrr, reciprocal_rank};
pub use replay::{replay_note, EhrClass, Policy, TermReplay};
pub use report::{
    compare_mrr, evaluate_corpus, evaluate_engine, Evaluation, KeystrokeSummary, MetricReport, NoteValues,
    ScopeSummary, Strata, Stratum, TypeMetrics,
};
pub use stats::{paired_bootstrap, PairedDifference, Summary};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("ground truth is empty")]
    EmptyTruth,
    #[error("{missing} ground-truth items are absent from the ranking")]
    MissingTruth { missing: usize },
    #[error("ground-truth span {start}..{end} does not match the note text")]
    Misaligned { start: usize, end: usize },
    #[error("no records to evaluate")]
    NoRecords,
}
