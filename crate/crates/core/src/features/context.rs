use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::features::FeatureError;
use crate::ontology::{EntryIdx, Ontology};

/// Triage vital signs; every field may be missing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TriageVitals {
    #[serde(default, rename = "temperature", skip_serializing_if = "Option::is_none")]
    pub temperature_f: Option<f64>,
    #[serde(default, rename = "heart_rate", skip_serializing_if = "Option::is_none")]
    pub heart_rate_bpm: Option<f64>,
    #[serde(default, rename = "resp_rate", skip_serializing_if = "Option::is_none")]
    pub resp_rate_bpm: Option<f64>,
    #[serde(default, rename = "spo2", skip_serializing_if = "Option::is_none")]
    pub spo2_pct: Option<f64>,
    #[serde(default, rename = "systolic", skip_serializing_if = "Option::is_none")]
    pub systolic_mmhg: Option<f64>,
    #[serde(default, rename = "diastolic", skip_serializing_if = "Option::is_none")]
    pub diastolic_mmhg: Option<f64>,
    #[serde(default, rename = "age", skip_serializing_if = "Option::is_none")]
    pub age_years: Option<f64>,
}

impl TriageVitals {
    fn values(&self) -> [(&'static str, Option<f64>); 7] {
        [
            ("temperature", self.temperature_f),
            ("heart_rate", self.heart_rate_bpm),
            ("resp_rate", self.resp_rate_bpm),
            ("spo2", self.spo2_pct),
            ("systolic", self.systolic_mmhg),
            ("diastolic", self.diastolic_mmhg),
            ("age", self.age_years),
        ]
    }

    pub fn is_empty(&self) -> bool {
        self.values().iter().all(|(_, v)| v.is_none())
    }
}

/// A concept seen in the prior record, `age_days` before this visit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EhrMention {
    pub entry: String,
    pub age_days: f64,
}

/// A structured-history count (labs ordered, medications prescribed).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryCount {
    pub entry: String,
    pub count: u32,
}

/// Everything known about a patient before the note is written.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PatientContext {
    #[serde(default)]
    pub patient_id: String,
    #[serde(default)]
    pub triage_text: String,
    #[serde(default)]
    pub chief_complaint: String,
    #[serde(default)]
    pub vitals: TriageVitals,
    #[serde(default)]
    pub ehr: Vec<EhrMention>,
    #[serde(default)]
    pub labs: Vec<HistoryCount>,
    #[serde(default)]
    pub meds: Vec<HistoryCount>,
    /// Explicit prior-record marker, for patients whose record holds no
    /// extractable concepts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub has_history: Option<bool>,
}

impl PatientContext {
    pub fn has_history(&self) -> bool {
        !self.ehr.is_empty() || self.has_history.unwrap_or(false)
    }

    /// Checks vitals and ages are finite and positive and that every
    /// referenced entry exists.
    pub fn validate(&self, ontology: &Ontology) -> Result<(), FeatureError> {
        for (name, v) in self.vitals.values() {
            if let Some(v) = v {
                if !v.is_finite() || v <= 0.0 {
                    return Err(FeatureError::InvalidVital { name: name.to_string(), value: v });
                }
            }
        }
        for m in &self.ehr {
            if !m.age_days.is_finite() || m.age_days < 0.0 {
                return Err(FeatureError::NegativeDelay(m.age_days));
            }
        }
        let ids = self.ehr.iter().map(|m| &m.entry).chain(self.labs.iter().chain(&self.meds).map(|c| &c.entry));
        for id in ids {
            if ontology.find(id).is_none() {
                return Err(FeatureError::UnknownEntry(id.clone()));
            }
        }
        Ok(())
    }

    /// Most recent mention age per known entry.
    pub fn ehr_ages(&self, ontology: &Ontology) -> HashMap<EntryIdx, f64> {
        let mut ages: HashMap<EntryIdx, f64> = HashMap::new();
        for m in &self.ehr {
            if let Some(e) = ontology.find(&m.entry) {
                ages.entry(e).and_modify(|a| *a = a.min(m.age_days)).or_insert(m.age_days);
            }
        }
        ages
    }

    /// Summed counts per known entry for a structured history list.
    pub fn history_counts(list: &[HistoryCount], ontology: &Ontology) -> HashMap<EntryIdx, u32> {
        let mut out: HashMap<EntryIdx, u32> = HashMap::new();
        for c in list {
            if let Some(e) = ontology.find(&c.entry) {
                *out.entry(e).or_default() += c.count;
            }
        }
        out
    }
}
