use std::collections::{BTreeSet, HashMap};

use crate::corpus::{documented_entries, Visit};
use crate::extraction::{ConceptExtractor, NegationLexicon};
use crate::features::{PatientContext, PopulationStats, SparseVector, TfidfConfig, TfidfVocabulary, TriageVitals};
use crate::ontology::{ConceptType, EntryIdx, Ontology};
use crate::ranking::RankingError;

/// Covariates and labels of one visit for the condition models.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionRow {
    pub text: SparseVector,
    /// Buckets present in the prior record, ascending.
    pub ehr_buckets: Vec<usize>,
    /// Most recent mention age per present bucket.
    pub delays: HashMap<usize, f64>,
    /// Condition buckets with a member documented in the note, ascending.
    pub targets: Vec<usize>,
}

impl ConditionRow {
    pub fn from_context(context: &PatientContext, vocab: &TfidfVocabulary, ontology: &Ontology) -> Self {
        let mut delays: HashMap<usize, f64> = HashMap::new();
        for (e, d) in context.ehr_ages(ontology) {
            let b = ontology.bucket_index(e);
            delays.entry(b).and_modify(|x| *x = x.min(d)).or_insert(d);
        }
        let mut ehr_buckets: Vec<usize> = delays.keys().copied().collect();
        ehr_buckets.sort_unstable();
        Self { text: vocab.encode(&context.triage_text), ehr_buckets, delays, targets: Vec::new() }
    }

    pub fn has_bucket(&self, b: usize) -> bool {
        self.ehr_buckets.binary_search(&b).is_ok()
    }

    pub fn is_target(&self, b: usize) -> bool {
        self.targets.binary_search(&b).is_ok()
    }
}

#[derive(Debug, Clone)]
pub struct ConditionDataset {
    pub vocab: TfidfVocabulary,
    pub rows: Vec<ConditionRow>,
    pub bucket_count: usize,
    /// Output buckets of the condition models, ascending.
    pub condition_buckets: Vec<usize>,
}

impl ConditionDataset {
    /// Labels each visit with the buckets of the conditions its note mentions.
    /// Fits a vocabulary on the visits' triage texts unless one is given.
    pub fn from_visits(
        visits: &[Visit],
        ontology: &Ontology,
        extractor: &ConceptExtractor,
        lexicon: &NegationLexicon,
        vocab: Option<TfidfVocabulary>,
    ) -> Result<Self, RankingError> {
        if visits.is_empty() {
            return Err(RankingError::EmptyDataset);
        }
        let vocab = match vocab {
            Some(v) => v,
            None => {
                let texts: Vec<&str> = visits.iter().map(|v| v.context.triage_text.as_str()).collect();
                TfidfVocabulary::fit(&texts, TfidfConfig::default())?
            }
        };
        let rows = visits
            .iter()
            .map(|v| {
                let mut row = ConditionRow::from_context(&v.context, &vocab, ontology);
                let targets: BTreeSet<usize> = documented_entries(v, extractor, lexicon)
                    .into_iter()
                    .filter(|&e| ontology.entry(e).concept_type == ConceptType::Condition)
                    .map(|e| ontology.bucket_index(e))
                    .collect();
                row.targets = targets.into_iter().collect();
                row
            })
            .collect();
        Ok(Self {
            vocab,
            rows,
            bucket_count: ontology.bucket_count(),
            condition_buckets: ontology.buckets_of_type(ConceptType::Condition).to_vec(),
        })
    }
}

/// Covariates and labels of one visit for the symptom models.
#[derive(Debug, Clone, PartialEq)]
pub struct SymptomRow {
    pub complaint: String,
    pub vitals: TriageVitals,
    /// Symptom entries documented in the note.
    pub targets: BTreeSet<EntryIdx>,
}

#[derive(Debug, Clone)]
pub struct SymptomDataset {
    pub rows: Vec<SymptomRow>,
    pub stats: PopulationStats,
    pub symptoms: Vec<EntryIdx>,
}

impl SymptomDataset {
    pub fn from_visits(
        visits: &[Visit],
        ontology: &Ontology,
        extractor: &ConceptExtractor,
        lexicon: &NegationLexicon,
    ) -> Result<Self, RankingError> {
        if visits.is_empty() {
            return Err(RankingError::EmptyDataset);
        }
        let rows = visits
            .iter()
            .map(|v| SymptomRow {
                complaint: normalize_complaint(&v.context.chief_complaint),
                vitals: v.context.vitals,
                targets: documented_entries(v, extractor, lexicon)
                    .into_iter()
                    .filter(|&e| ontology.entry(e).concept_type == ConceptType::Symptom)
                    .collect(),
            })
            .collect();
        Ok(Self {
            rows,
            stats: PopulationStats::fit(visits.iter().map(|v| &v.context.vitals)),
            symptoms: ontology.entries_of(ConceptType::Symptom).to_vec(),
        })
    }
}

pub(crate) fn normalize_complaint(c: &str) -> String {
    c.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}
