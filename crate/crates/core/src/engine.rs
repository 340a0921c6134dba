//! Named rankers over all four concept types, and the trained model set they
//! are built from.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Visit;
use crate::extraction::{ConceptExtractor, NegationLexicon};
use crate::features::PatientContext;
use crate::ontology::{ConceptType, EntryIdx, Ontology};
use crate::ranking::{
    bucket_order, rank_by_corpus_frequency, rank_condition_terms, rank_frequency, rank_spell, ConditionDataset,
    ConditionNetwork, ConditionRow, LrConfig, NetworkConfig, OvrConfig, OvrLrModel, OvrVariant, RankedList,
    RankingError, SymptomDataset, SymptomLr, SymptomNb, SymptomTable,
};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Ranking(#[from] RankingError),
    #[error("unknown engine {0:?}")]
    UnknownEngine(String),
}

pub const NET_FILE: &str = "net.json";
pub const LR_TEXT_FILE: &str = "lr.json";
pub const LR_EHR_FILE: &str = "lr-ehr.json";
pub const LR_DELAY_FILE: &str = "lr-delay.json";
pub const TABLE_FILE: &str = "symptom-table.json";
pub const SYMPTOM_LR_FILE: &str = "symptom-lr.json";
pub const SYMPTOM_NB_FILE: &str = "symptom-nb.json";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub network: NetworkConfig,
    pub ovr: OvrConfig,
    pub symptom_lr: LrConfig,
    /// Add-α smoothing of the empirical symptom tables.
    pub alpha: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            network: NetworkConfig::default(),
            ovr: OvrConfig::default(),
            symptom_lr: LrConfig::default(),
            alpha: 1.0,
            seed: 17,
        }
    }
}

/// Every trained model.
#[derive(Debug, Clone)]
pub struct ModelSet {
    pub network: Arc<ConditionNetwork>,
    pub lr_text: Arc<OvrLrModel>,
    pub lr_ehr: Arc<OvrLrModel>,
    pub lr_delay: Arc<OvrLrModel>,
    /// Fitted with vital cells; the complaint-only variant reuses its counts.
    pub table: Arc<SymptomTable>,
    pub symptom_lr: Arc<SymptomLr>,
    pub symptom_nb: Arc<SymptomNb>,
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), EngineError> {
    let path = dir.join(name);
    let raw = serde_json::to_vec(value).map_err(|source| EngineError::Json { path: path.clone(), source })?;
    std::fs::write(&path, raw).map_err(|source| EngineError::Io { path, source })
}

fn read_json<T: DeserializeOwned>(dir: &Path, name: &str) -> Result<T, EngineError> {
    let path = dir.join(name);
    let raw = std::fs::read(&path).map_err(|source| EngineError::Io { path: path.clone(), source })?;
    serde_json::from_slice(&raw).map_err(|source| EngineError::Json { path, source })
}

impl ModelSet {
    pub fn train(
        visits: &[Visit],
        ontology: &Ontology,
        extractor: &ConceptExtractor,
        lexicon: &NegationLexicon,
        config: &TrainConfig,
    ) -> Result<Self, RankingError> {
        let conditions = ConditionDataset::from_visits(visits, ontology, extractor, lexicon, None)?;
        log::info!("condition dataset: {} rows, vocabulary {}", conditions.rows.len(), conditions.vocab.len());
        let network = ConditionNetwork::train(&conditions, ontology, config.network)?;
        log::info!("network trained, final loss {:?}", network.final_loss);
        let ovr = |v| OvrLrModel::train(&conditions, v, config.ovr).map(Arc::new);
        let lr_text = ovr(OvrVariant::TextOnly)?;
        let lr_ehr = ovr(OvrVariant::TextEhr)?;
        let lr_delay = ovr(OvrVariant::TextEhrDelay)?;
        let symptoms = SymptomDataset::from_visits(visits, ontology, extractor, lexicon)?;
        let table = SymptomTable::fit(&symptoms, true, config.alpha);
        let symptom_lr = SymptomLr::train(
            &symptoms,
            config.symptom_lr,
            config.ovr.min_positives,
            config.ovr.epsilon,
            config.seed,
        )?;
        let symptom_nb = SymptomNb::train(&symptoms)?;
        Ok(Self {
            network: Arc::new(network),
            lr_text,
            lr_ehr,
            lr_delay,
            table: Arc::new(table),
            symptom_lr: Arc::new(symptom_lr),
            symptom_nb: Arc::new(symptom_nb),
        })
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), EngineError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|source| EngineError::Io { path: dir.to_path_buf(), source })?;
        write_json(dir, NET_FILE, &*self.network)?;
        write_json(dir, LR_TEXT_FILE, &*self.lr_text)?;
        write_json(dir, LR_EHR_FILE, &*self.lr_ehr)?;
        write_json(dir, LR_DELAY_FILE, &*self.lr_delay)?;
        write_json(dir, TABLE_FILE, &*self.table)?;
        write_json(dir, SYMPTOM_LR_FILE, &*self.symptom_lr)?;
        write_json(dir, SYMPTOM_NB_FILE, &*self.symptom_nb)
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self, EngineError> {
        let dir = dir.as_ref();
        Ok(Self {
            network: Arc::new(read_json(dir, NET_FILE)?),
            lr_text: Arc::new(read_json(dir, LR_TEXT_FILE)?),
            lr_ehr: Arc::new(read_json(dir, LR_EHR_FILE)?),
            lr_delay: Arc::new(read_json(dir, LR_DELAY_FILE)?),
            table: Arc::new(read_json(dir, TABLE_FILE)?),
            symptom_lr: Arc::new(read_json(dir, SYMPTOM_LR_FILE)?),
            symptom_nb: Arc::new(read_json(dir, SYMPTOM_NB_FILE)?),
        })
    }

    /// Builds a named engine; see [`ENGINE_NAMES`].
    pub fn engine(&self, name: &str, ontology: Arc<Ontology>) -> Result<Engine, EngineError> {
        let complaint_only = || {
            let mut t = (*self.table).clone();
            t.use_vital = false;
            t.cells.clear();
            SymptomRanker::Table(Arc::new(t))
        };
        let net = || ConditionRanker::Network(self.network.clone());
        let table = || SymptomRanker::Table(self.table.clone());
        let (condition, symptom, history) = match name {
            "contextual" | "net" | "table-cv" => (net(), table(), HistoryRanker::Contextual),
            "lr-delay" => (ConditionRanker::Ovr(self.lr_delay.clone()), table(), HistoryRanker::Contextual),
            "lr-ehr" => (ConditionRanker::Ovr(self.lr_ehr.clone()), table(), HistoryRanker::Contextual),
            "lr-text" => (ConditionRanker::Ovr(self.lr_text.clone()), table(), HistoryRanker::Contextual),
            "table-c" => (net(), complaint_only(), HistoryRanker::Contextual),
            "symptom-nb" => (net(), SymptomRanker::Nb(self.symptom_nb.clone()), HistoryRanker::Contextual),
            "symptom-lr" => (net(), SymptomRanker::Lr(self.symptom_lr.clone()), HistoryRanker::Contextual),
            _ => return Engine::baseline(name, ontology),
        };
        Ok(Engine::new(name, ontology, condition, symptom, history))
    }
}

/// Engines [`ModelSet::engine`] knows. Condition variants pair with the
/// vital-conditioned symptom table; symptom variants pair with the network.
pub const ENGINE_NAMES: [&str; 12] = [
    "contextual",
    "frequency",
    "spell",
    "net",
    "lr-delay",
    "lr-ehr",
    "lr-text",
    "table-cv",
    "table-c",
    "symptom-nb",
    "symptom-lr",
    "none",
];

#[derive(Debug, Clone)]
pub enum ConditionRanker {
    Network(Arc<ConditionNetwork>),
    Ovr(Arc<OvrLrModel>),
    Frequency,
    Spell,
}

#[derive(Debug, Clone)]
pub enum SymptomRanker {
    Table(Arc<SymptomTable>),
    Lr(Arc<SymptomLr>),
    Nb(Arc<SymptomNb>),
    Frequency,
    Spell,
}

/// Ranking of labs and medications.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistoryRanker {
    /// Structured-history counts first, then corpus frequency.
    Contextual,
    Frequency,
    Spell,
}

/// One ranker per concept type. Counts its invocations so callers can check
/// that rankings are computed once per patient.
#[derive(Debug)]
pub struct Engine {
    name: String,
    ontology: Arc<Ontology>,
    condition: ConditionRanker,
    symptom: SymptomRanker,
    history: HistoryRanker,
    invocations: [AtomicU64; 4],
}

impl Engine {
    pub fn new(
        name: &str,
        ontology: Arc<Ontology>,
        condition: ConditionRanker,
        symptom: SymptomRanker,
        history: HistoryRanker,
    ) -> Self {
        Self { name: name.to_string(), ontology, condition, symptom, history, invocations: Default::default() }
    }

    /// Engines that need no trained model: `frequency`, `spell`, and `none`
    /// (frequency order, used with the no-autocomplete policy).
    pub fn baseline(name: &str, ontology: Arc<Ontology>) -> Result<Self, EngineError> {
        let (c, s, h) = match name {
            "frequency" | "none" => (ConditionRanker::Frequency, SymptomRanker::Frequency, HistoryRanker::Frequency),
            "spell" => (ConditionRanker::Spell, SymptomRanker::Spell, HistoryRanker::Spell),
            _ => return Err(EngineError::UnknownEngine(name.to_string())),
        };
        Ok(Self::new(name, ontology, c, s, h))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ontology(&self) -> &Arc<Ontology> {
        &self.ontology
    }

    /// Ranker invocations so far, indexed by [`ConceptType::index`].
    pub fn invocations(&self) -> [u64; 4] {
        std::array::from_fn(|i| self.invocations[i].load(Ordering::Relaxed))
    }

    pub fn rank(&self, t: ConceptType, context: &PatientContext) -> RankedList {
        self.invocations[t.index()].fetch_add(1, Ordering::Relaxed);
        let o = &*self.ontology;
        match t {
            ConceptType::Condition => self.rank_conditions(context),
            ConceptType::Symptom => match &self.symptom {
                SymptomRanker::Table(m) => m.rank(&context.chief_complaint, &context.vitals),
                SymptomRanker::Lr(m) => m.rank(&context.chief_complaint, &context.vitals),
                SymptomRanker::Nb(m) => m.rank(&context.chief_complaint, &context.vitals),
                SymptomRanker::Frequency => rank_by_corpus_frequency(t, o),
                SymptomRanker::Spell => rank_spell(t, o),
            },
            ConceptType::Lab | ConceptType::Medication => match self.history {
                HistoryRanker::Contextual => rank_frequency(t, context, o),
                HistoryRanker::Frequency => rank_by_corpus_frequency(t, o),
                HistoryRanker::Spell => rank_spell(t, o),
            },
        }
    }

    fn rank_conditions(&self, context: &PatientContext) -> RankedList {
        let o = &*self.ontology;
        match &self.condition {
            ConditionRanker::Network(net) => {
                let row = ConditionRow::from_context(context, &net.vocab, o);
                let order = bucket_order(&net.bucket_scores(&row));
                let ehr: HashSet<EntryIdx> = context
                    .ehr_ages(o)
                    .into_keys()
                    .filter(|&e| o.entry(e).concept_type == ConceptType::Condition)
                    .collect();
                rank_condition_terms(&order, &ehr, o)
            }
            ConditionRanker::Ovr(m) => {
                let row = ConditionRow::from_context(context, &m.vocab, o);
                rank_condition_terms(&bucket_order(&m.bucket_scores(&row)), &HashSet::new(), o)
            }
            ConditionRanker::Frequency => rank_by_corpus_frequency(ConceptType::Condition, o),
            ConditionRanker::Spell => rank_spell(ConceptType::Condition, o),
        }
    }

    /// All four rankings, in [`ConceptType::ALL`] order.
    pub fn rank_all(&self, context: &PatientContext) -> [RankedList; 4] {
        ConceptType::ALL.map(|t| self.rank(t, context))
    }
}
