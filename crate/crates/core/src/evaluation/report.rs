use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::EvalRecord;
use crate::engine::Engine;
use crate::evaluation::metrics::{map_score, mrr, reciprocal_rank};
use crate::evaluation::replay::{replay_note, EhrClass, Policy, TermReplay};
use crate::evaluation::stats::{paired_bootstrap, PairedDifference, Summary};
use crate::evaluation::EvalError;
use crate::ontology::{ConceptType, EntryIdx, Ontology};
use crate::session::{CachedRankings, TriggerLexicon};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeMetrics {
    /// Shifted-rank MRR, one value per note with terms of the type.
    pub mrr: Summary,
    pub map: Summary,
    /// Standard reciprocal rank of the first documented term.
    pub reciprocal_rank: Summary,
    /// Per-note mean keystroke burden.
    pub burden: Summary,
    pub terms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeystrokeSummary {
    pub terms: usize,
    pub mean_burden: f64,
    pub mean_length: f64,
    /// `1 − Σ burden / Σ length`.
    pub reduction: f64,
    pub autocompleted: f64,
    pub manual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScopeSummary {
    /// Fraction of terms reached with scope already on.
    pub auto_triggered: f64,
    /// Among auto-triggered terms, fraction whose type led the order.
    pub type_correct: f64,
}

/// Term-level keystroke statistics of one slice of terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub key: String,
    pub burden: Summary,
    pub mean_length: f64,
    pub reduction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strata {
    pub by_section: Vec<Stratum>,
    /// Condition terms by frequency tercile and relation to the prior record.
    pub by_frequency_ehr: Vec<Stratum>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub engine: String,
    pub policy: String,
    pub records: usize,
    pub per_type: BTreeMap<ConceptType, TypeMetrics>,
    /// Per-note average over the types the note documents.
    pub overall: TypeMetrics,
    pub keystrokes: KeystrokeSummary,
    pub scope: ScopeSummary,
    pub strata: Strata,
}

/// Per-note values behind a report, kept for paired comparisons.
#[derive(Debug, Clone, Default)]
pub struct NoteValues {
    /// Shifted MRR per type; `None` when the note documents none of the type.
    pub mrr: [Option<f64>; 4],
    pub map: [Option<f64>; 4],
    pub rr: [Option<f64>; 4],
    pub terms: Vec<TermReplay>,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: MetricReport,
    pub notes: Vec<NoteValues>,
}

impl Evaluation {
    /// Per-note MRR of one type over notes documenting it.
    pub fn mrr_values(&self, t: ConceptType) -> Vec<Option<f64>> {
        self.notes.iter().map(|n| n.mrr[t.index()]).collect()
    }
}

/// Paired bootstrap of `a − b` on per-note MRR of one type, over notes both
/// evaluations scored.
pub fn compare_mrr(a: &Evaluation, b: &Evaluation, t: ConceptType, resamples: usize, seed: u64) -> PairedDifference {
    let (xs, ys): (Vec<f64>, Vec<f64>) = a
        .mrr_values(t)
        .into_iter()
        .zip(b.mrr_values(t))
        .filter_map(|(x, y)| Some((x?, y?)))
        .unzip();
    paired_bootstrap(&xs, &ys, resamples, seed)
}

fn evaluate_note(
    record: &EvalRecord,
    engine: &Engine,
    triggers: &TriggerLexicon,
    policy: Policy,
) -> Result<NoteValues, EvalError> {
    let o = &**engine.ontology();
    let rankings = CachedRankings::new(o, engine.rank_all(&record.context));
    let mut v = NoteValues::default();
    for t in ConceptType::ALL {
        let truth = record.truth(t, o);
        if truth.is_empty() {
            continue;
        }
        let ranking: Vec<EntryIdx> = rankings.list(t).entries().collect();
        v.mrr[t.index()] = Some(mrr(&ranking, &truth)?);
        v.map[t.index()] = Some(map_score(&ranking, &truth)?);
        v.rr[t.index()] = Some(reciprocal_rank(&ranking, &truth)?);
    }
    v.terms = replay_note(record, o, &rankings, triggers, policy, None)?;
    Ok(v)
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn stratum<'a>(key: String, terms: impl IntoIterator<Item = &'a TermReplay>) -> Stratum {
    let (burden, length): (Vec<f64>, Vec<f64>) = terms.into_iter().map(|t| (t.burden as f64, t.length as f64)).unzip();
    let total_len: f64 = length.iter().sum();
    Stratum {
        key,
        mean_length: mean(&length).unwrap_or(f64::NAN),
        reduction: 1.0 - burden.iter().sum::<f64>() / total_len,
        burden: Summary::of(&burden),
    }
}

/// Frequency tercile thresholds over condition entries: `(lower, upper)`
/// such that `f < lower` is uncommon and `f >= upper` is common.
fn condition_terciles(ontology: &Ontology) -> (u64, u64) {
    let mut f: Vec<u64> =
        ontology.entries_of(ConceptType::Condition).iter().map(|&e| ontology.entry(e).frequency).collect();
    f.sort_unstable();
    if f.is_empty() {
        return (0, 0);
    }
    (f[f.len() / 3], f[2 * f.len() / 3])
}

/// Rankings, metrics and keystroke replay of every record under one engine.
/// Records are processed in parallel and aggregated in input order.
pub fn evaluate_engine(
    records: &[EvalRecord],
    engine: &Engine,
    triggers: &TriggerLexicon,
    policy: Policy,
) -> Result<Evaluation, EvalError> {
    if records.is_empty() {
        return Err(EvalError::NoRecords);
    }
    let notes: Vec<NoteValues> = records
        .par_iter()
        .map(|r| evaluate_note(r, engine, triggers, policy))
        .collect::<Result<_, _>>()?;
    let o = &**engine.ontology();

    let type_metrics = |pick: &dyn Fn(&NoteValues) -> Option<[f64; 3]>, burden: &dyn Fn(&NoteValues) -> Option<f64>| {
        let vals: Vec<[f64; 3]> = notes.iter().filter_map(pick).collect();
        let col = |i: usize| vals.iter().map(|v| v[i]).collect::<Vec<_>>();
        let burdens: Vec<f64> = notes.iter().filter_map(burden).collect();
        TypeMetrics {
            mrr: Summary::of(&col(0)),
            map: Summary::of(&col(1)),
            reciprocal_rank: Summary::of(&col(2)),
            burden: Summary::of(&burdens),
            terms: 0,
        }
    };
    let mut per_type = BTreeMap::new();
    for t in ConceptType::ALL {
        let i = t.index();
        let mut m = type_metrics(&|n| Some([n.mrr[i]?, n.map[i]?, n.rr[i]?]), &|n| {
            let b: Vec<f64> = n.terms.iter().filter(|x| x.concept_type == t).map(|x| x.burden as f64).collect();
            mean(&b)
        });
        m.terms = notes.iter().flat_map(|n| &n.terms).filter(|x| x.concept_type == t).count();
        per_type.insert(t, m);
    }
    let avg = |a: &[Option<f64>; 4]| mean(&a.iter().flatten().copied().collect::<Vec<_>>());
    let mut overall = type_metrics(&|n| Some([avg(&n.mrr)?, avg(&n.map)?, avg(&n.rr)?]), &|n| {
        mean(&n.terms.iter().map(|x| x.burden as f64).collect::<Vec<_>>())
    });

    let all: Vec<&TermReplay> = notes.iter().flat_map(|n| &n.terms).collect();
    overall.terms = all.len();
    let frac = |f: &dyn Fn(&TermReplay) -> bool, of: &[&TermReplay]| {
        if of.is_empty() {
            f64::NAN
        } else {
            of.iter().filter(|t| f(t)).count() as f64 / of.len() as f64
        }
    };
    let whole = stratum("ALL".into(), all.iter().copied());
    let keystrokes = KeystrokeSummary {
        terms: all.len(),
        mean_burden: whole.burden.mean,
        mean_length: whole.mean_length,
        reduction: whole.reduction,
        autocompleted: frac(&|t| t.autocompleted, &all),
        manual: frac(&|t| t.manual, &all),
    };
    let auto: Vec<&TermReplay> = all.iter().copied().filter(|t| t.auto_triggered).collect();
    let scope =
        ScopeSummary { auto_triggered: frac(&|t| t.auto_triggered, &all), type_correct: frac(&|t| t.type_correct, &auto) };

    let mut by_section: BTreeMap<_, Vec<&TermReplay>> = BTreeMap::new();
    for t in &all {
        by_section.entry(t.section).or_default().push(t);
    }
    let (lower, upper) = condition_terciles(o);
    let tercile = |e: EntryIdx| {
        let f = o.entry(e).frequency;
        if f < lower {
            "UNCOMMON"
        } else if f < upper {
            "MEDIAN"
        } else {
            "COMMON"
        }
    };
    let mut by_freq: BTreeMap<(EhrClass, &str), Vec<&TermReplay>> = BTreeMap::new();
    for t in all.iter().filter(|t| t.concept_type == ConceptType::Condition) {
        by_freq.entry((t.ehr, tercile(t.entry))).or_default().push(t);
    }
    let strata = Strata {
        by_section: by_section.into_iter().map(|(s, v)| stratum(s.as_str().into(), v)).collect(),
        by_frequency_ehr: by_freq
            .into_iter()
            .map(|((e, f), v)| {
                let key = format!("{}/{}", serde_json::to_value(e).expect("enum serializes").as_str().unwrap_or(""), f);
                stratum(key, v)
            })
            .collect(),
    };

    Ok(Evaluation {
        report: MetricReport {
            engine: engine.name().to_string(),
            policy: policy.to_string(),
            records: records.len(),
            per_type,
            overall,
            keystrokes,
            scope,
            strata,
        },
        notes,
    })
}

/// Reports for several engines over the same records.
pub fn evaluate_corpus(
    records: &[EvalRecord],
    engines: &[&Engine],
    triggers: &TriggerLexicon,
    policy: Policy,
) -> Result<Vec<Evaluation>, EvalError> {
    engines.iter().map(|e| evaluate_engine(records, e, triggers, policy)).collect()
}
