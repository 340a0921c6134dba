use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpusgen::GeneratorError;
use crate::features::VitalKind;
use crate::ontology::{ConceptType, Ontology};
use crate::text::{is_token_sequence, normalize_synonym};

const DEFAULT_CONFIG: &str = include_str!("../../data/generator.json");

/// A word that, when present in the triage text, makes a condition bucket
/// likely to be documented.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTrigger {
    pub bucket: String,
    pub token: String,
    /// Probability that a member of the bucket is documented when the token
    /// is planted.
    pub p_relevant: f64,
}

/// An abnormal vital planted for some visits of one complaint, with the
/// symptom probabilities it overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VitalPerturbation {
    pub vital: VitalKind,
    /// Mean of the abnormal value; for blood pressure the systolic value,
    /// with the diastolic at 0.6 of it.
    pub mean: f64,
    pub sd: f64,
    /// Fraction of the complaint's visits that get the abnormal value.
    pub rate: f64,
    pub symptoms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplaintSpec {
    pub name: String,
    pub weight: f64,
    /// Probability that each symptom is documented; unlisted symptoms never are.
    pub symptoms: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<VitalPerturbation>,
}

/// Prior-record conditions and how their age drives documentation:
/// `P(documented | age d) = floor + recent · exp(−d / decay_days)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryConfig {
    pub min_conditions: usize,
    pub max_conditions: usize,
    /// Prior-record symptoms per patient, drawn uniformly from `0..=max`.
    pub max_symptoms: usize,
    pub max_age_days: f64,
    pub document_floor: f64,
    pub document_recent: f64,
    pub decay_days: f64,
}

impl HistoryConfig {
    pub fn p_documented(&self, age_days: f64) -> f64 {
        self.document_floor + self.document_recent * (-age_days / self.decay_days).exp()
    }
}

/// Structured lab or medication history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredConfig {
    pub max_items: usize,
    pub max_count: u32,
    /// Probability that a history item is documented.
    pub document: f64,
    /// Probability of one extra item drawn by popularity.
    pub extra_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub visits: usize,
    /// Trailing fraction of visits written to the test split.
    pub test_fraction: f64,
    pub no_history_fraction: f64,
    /// Fraction of note sentences that are distractors without concepts.
    pub distractor_fraction: f64,
    pub negated_symptom_fraction: f64,
    /// Probability a mention uses the canonical name rather than another synonym.
    pub canonical_name_fraction: f64,
    /// Fraction of PMH lists written without a leading trigger phrase.
    #[serde(default)]
    pub untriggered_history_fraction: f64,
    pub history: HistoryConfig,
    /// Fraction of visits whose triage text carries a planted trigger.
    pub trigger_rate: f64,
    pub triggers: Vec<PlantedTrigger>,
    /// Probability of one new condition drawn by popularity.
    pub background_condition_rate: f64,
    pub complaints: Vec<ComplaintSpec>,
    pub labs: StructuredConfig,
    pub meds: StructuredConfig,
    /// Filler entries are added until the ontology holds this many synonyms;
    /// 0 keeps the base ontology.
    #[serde(default)]
    pub total_synonyms: usize,
    /// Filler triage words.
    pub triage_words: Vec<String>,
    pub distractors: Vec<String>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_CONFIG).expect("bundled generator config parses")
    }
}

fn probability(field: String, p: f64) -> Result<(), GeneratorError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(GeneratorError::Probability { field, value: p })
    }
}

impl GeneratorConfig {
    pub fn from_json(raw: &str) -> Result<Self, GeneratorError> {
        Ok(serde_json::from_str(raw)?)
    }

    /// Checks probabilities, weights and references against the base ontology.
    pub fn validate(&self, ontology: &Ontology) -> Result<(), GeneratorError> {
        if self.visits == 0 {
            return Err(GeneratorError::Inconsistent("visits must be positive".into()));
        }
        for (name, p) in [
            ("test_fraction", self.test_fraction),
            ("no_history_fraction", self.no_history_fraction),
            ("distractor_fraction", self.distractor_fraction),
            ("negated_symptom_fraction", self.negated_symptom_fraction),
            ("canonical_name_fraction", self.canonical_name_fraction),
            ("untriggered_history_fraction", self.untriggered_history_fraction),
            ("trigger_rate", self.trigger_rate),
            ("background_condition_rate", self.background_condition_rate),
            ("labs.document", self.labs.document),
            ("labs.extra_rate", self.labs.extra_rate),
            ("meds.document", self.meds.document),
            ("meds.extra_rate", self.meds.extra_rate),
        ] {
            probability(name.into(), p)?;
        }
        if self.distractor_fraction >= 1.0 {
            return Err(GeneratorError::Inconsistent("distractor_fraction must be below 1".into()));
        }
        let h = &self.history;
        if h.min_conditions > h.max_conditions || h.max_conditions == 0 {
            return Err(GeneratorError::Inconsistent("history condition counts".into()));
        }
        if !(h.decay_days > 0.0 && h.max_age_days > 0.0) {
            return Err(GeneratorError::Inconsistent("history ages must be positive".into()));
        }
        probability("history.p_documented(0)".into(), h.p_documented(0.0))?;
        probability("history.document_floor".into(), h.document_floor)?;

        if self.trigger_rate > 0.0 && self.triggers.is_empty() {
            return Err(GeneratorError::Inconsistent("trigger_rate set without triggers".into()));
        }
        let mut tokens = HashSet::new();
        for t in &self.triggers {
            probability(format!("trigger {}", t.token), t.p_relevant)?;
            let b = ontology.bucket_by_id(&t.bucket).ok_or_else(|| GeneratorError::UnknownBucket(t.bucket.clone()))?;
            if ontology.bucket_type(b.index) != ConceptType::Condition {
                return Err(GeneratorError::Inconsistent(format!("trigger bucket {} is not a condition bucket", t.bucket)));
            }
            let tok = normalize_synonym(&t.token);
            if tok.contains(' ') || !is_token_sequence(&tok) || !tokens.insert(tok) {
                return Err(GeneratorError::Inconsistent(format!("trigger token {:?} must be a distinct single word", t.token)));
            }
        }

        if self.complaints.is_empty() {
            return Err(GeneratorError::Inconsistent("no complaints".into()));
        }
        let total: f64 = self.complaints.iter().map(|c| c.weight).sum();
        if self.complaints.iter().any(|c| !(c.weight >= 0.0 && c.weight.is_finite())) || !(total > 0.0) {
            return Err(GeneratorError::Inconsistent("complaint weights are not normalizable".into()));
        }
        let symptom = |id: &str| match ontology.find(id) {
            Some(e) if ontology.entry(e).concept_type == ConceptType::Symptom => Ok(()),
            _ => Err(GeneratorError::UnknownEntry(id.to_string())),
        };
        for c in &self.complaints {
            for (s, &p) in &c.symptoms {
                symptom(s)?;
                probability(format!("{} / {s}", c.name), p)?;
            }
            if let Some(v) = &c.perturbation {
                probability(format!("{} perturbation rate", c.name), v.rate)?;
                if v.vital == VitalKind::Age || !(v.mean > 0.0 && v.sd >= 0.0) {
                    return Err(GeneratorError::Inconsistent(format!("{} perturbation", c.name)));
                }
                for (s, &p) in &v.symptoms {
                    symptom(s)?;
                    probability(format!("{} perturbed / {s}", c.name), p)?;
                }
            }
        }
        if self.triage_words.is_empty() {
            return Err(GeneratorError::Inconsistent("no triage words".into()));
        }
        Ok(())
    }
}
