//! Deterministic synthetic visits with planted conditional structure.
//!
//! Generation runs in three passes. The first draws each visit's latent
//! state (complaint, vitals, prior record, planted trigger, documented
//! conditions, labs and medications). The second assigns documented
//! symptoms: within each (complaint, vital state) cell, every symptom is
//! documented in a uniformly random subset of the cell's visits whose size
//! is `n·p` with randomized rounding, so each visit is documented with
//! probability exactly `p` and cell frequencies match the planted table to
//! within `1/n`. The third renders triage texts and notes.

mod config;
mod expand;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use rand::seq::{index, IndexedRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{ComplaintSpec, GeneratorConfig, HistoryConfig, PlantedTrigger, StructuredConfig, VitalPerturbation};
pub use expand::expand_ontology;

use crate::corpus::{write_visits, CorpusError, Note, Visit};
use crate::features::{EhrMention, HistoryCount, PatientContext, TriageVitals, VitalKind};
use crate::ontology::{ConceptType, EntryIdx, Ontology, OntologyError, OntologyFile};
use crate::session::{NoteSection, TriggerLexicon};
use crate::text::words_lower;

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("{field}: probability {value} outside [0, 1]")]
    Probability { field: String, value: f64 },
    #[error("inconsistent config: {0}")]
    Inconsistent(String),
    #[error("unknown entry {0}")]
    UnknownEntry(String),
    #[error("unknown bucket {0}")]
    UnknownBucket(String),
    #[error("config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
}

pub const ONTOLOGY_FILE: &str = "ontology.json";
pub const TRAIN_FILE: &str = "train.jsonl";
pub const TEST_FILE: &str = "test.jsonl";
pub const PLANTED_FILE: &str = "planted.json";

/// Symptoms that are written in the exam section when documented.
const EXAM_FINDINGS: [&str; 5] = ["s_tenderness", "s_wheezing", "s_rash", "s_leg_swelling", "s_confusion"];

const HPI_SYMPTOM: [&str; 4] = ["presents with", "presenting with", "complains of", "c/o"];
const HISTORY: [&str; 3] = ["history of", "h/o", "hx of"];
const ROS_POSITIVE: [&str; 2] = ["endorses", "reports"];
const MED_HISTORY: [&str; 2] = ["takes", "taking"];
const MED_NEW: [&str; 2] = ["started on", "prescribed"];
const LABS: [&str; 3] = ["labs:", "ordered", "check"];
const TEMPLATE_WORDS: [&str; 12] =
    ["yo", "man", "woman", "here", "for", "evaluation", "denies", "notable", "concern", "unremarkable", "exam", "and"];

/// Symptom table of one complaint with the vital perturbation applied or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedComplaint {
    pub name: String,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vital: Option<VitalKind>,
    pub perturbation_rate: f64,
    /// `P(symptom documented | complaint, normal vitals)`.
    pub normal: BTreeMap<String, f64>,
    /// `P(symptom documented | complaint, perturbed vital)`.
    pub perturbed: BTreeMap<String, f64>,
}

impl PlantedComplaint {
    pub fn table(&self, perturbed: bool) -> &BTreeMap<String, f64> {
        if perturbed {
            &self.perturbed
        } else {
            &self.normal
        }
    }

    /// `P(symptom documented | complaint)` over both vital states.
    pub fn marginal(&self, symptom: &str) -> f64 {
        let p = |t: &BTreeMap<String, f64>| t.get(symptom).copied().unwrap_or(0.0);
        (1.0 - self.perturbation_rate) * p(&self.normal) + self.perturbation_rate * p(&self.perturbed)
    }
}

/// The conditionals a corpus was generated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTables {
    pub complaints: Vec<PlantedComplaint>,
    pub triggers: Vec<PlantedTrigger>,
    pub trigger_rate: f64,
    pub history: HistoryConfig,
    pub no_history_fraction: f64,
    pub background_condition_rate: f64,
}

/// A concept written into a generated note, in rendered-text offsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedMention {
    pub entry: EntryIdx,
    pub start: usize,
    pub end: usize,
    pub negated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedVisit {
    pub visit: Visit,
    pub complaint: usize,
    pub perturbed: bool,
    /// Index into the config's triggers.
    pub trigger: Option<usize>,
    pub mentions: Vec<PlantedMention>,
}

#[derive(Debug, Clone)]
pub struct GeneratedCorpus {
    /// Base ontology with frequencies counted on the training split, plus
    /// filler entries when configured.
    pub ontology: OntologyFile,
    pub visits: Vec<GeneratedVisit>,
    pub tables: PlantedTables,
    /// First visit of the test split.
    pub test_start: usize,
}

impl GeneratedCorpus {
    pub fn train(&self) -> &[GeneratedVisit] {
        &self.visits[..self.test_start]
    }

    pub fn test(&self) -> &[GeneratedVisit] {
        &self.visits[self.test_start..]
    }

    pub fn train_visits(&self) -> Vec<Visit> {
        self.train().iter().map(|v| v.visit.clone()).collect()
    }

    pub fn test_visits(&self) -> Vec<Visit> {
        self.test().iter().map(|v| v.visit.clone()).collect()
    }

    /// Writes the ontology, both splits and the planted tables into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<(), GeneratorError> {
        let dir = dir.as_ref();
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| GeneratorError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let p = dir.join(ONTOLOGY_FILE);
        std::fs::write(&p, serde_json::to_string_pretty(&self.ontology)?).map_err(io(&p))?;
        write_visits(dir.join(TRAIN_FILE), &self.train_visits())?;
        write_visits(dir.join(TEST_FILE), &self.test_visits())?;
        let p = dir.join(PLANTED_FILE);
        std::fs::write(&p, serde_json::to_string_pretty(&self.tables)?).map_err(io(&p))?;
        Ok(())
    }
}

/// Latent state of one visit before rendering.
struct Latent {
    complaint: usize,
    perturbed: bool,
    vitals: TriageVitals,
    ehr: Vec<EhrMention>,
    labs: Vec<HistoryCount>,
    meds: Vec<HistoryCount>,
    trigger: Option<usize>,
    /// Conditions from the prior record, then new ones.
    history_conditions: Vec<EntryIdx>,
    new_conditions: Vec<EntryIdx>,
    documented_labs: Vec<EntryIdx>,
    history_meds: Vec<EntryIdx>,
    new_meds: Vec<EntryIdx>,
    symptoms: Vec<EntryIdx>,
}

struct Pools {
    /// `(entry, popularity weight)` per type.
    by_type: [Vec<(EntryIdx, f64)>; 4],
    bucket_members: BTreeMap<String, Vec<(EntryIdx, f64)>>,
}

impl Pools {
    fn new(o: &Ontology) -> Self {
        let weight = |e: EntryIdx| (o.entry(e).frequency as f64).max(1.0);
        let by_type = ConceptType::ALL.map(|t| o.entries_of(t).iter().map(|&e| (e, weight(e))).collect());
        let mut bucket_members: BTreeMap<String, Vec<(EntryIdx, f64)>> = BTreeMap::new();
        for b in o.buckets() {
            bucket_members.insert(b.id.clone(), b.members.iter().map(|&e| (e, weight(e))).collect());
        }
        Self { by_type, bucket_members }
    }

    fn sample(pool: &[(EntryIdx, f64)], k: usize, rng: &mut ChaCha8Rng) -> Vec<EntryIdx> {
        let k = k.min(pool.len());
        if k == 0 {
            return Vec::new();
        }
        pool.choose_multiple_weighted(rng, k, |x| x.1).expect("positive weights").map(|x| x.0).collect()
    }

    fn one_not_in(pool: &[(EntryIdx, f64)], taken: &[EntryIdx], rng: &mut ChaCha8Rng) -> Option<EntryIdx> {
        let free: Vec<(EntryIdx, f64)> = pool.iter().filter(|x| !taken.contains(&x.0)).copied().collect();
        Self::sample(&free, 1, rng).pop()
    }
}

fn round_to(x: f64, step: f64) -> f64 {
    ((x / step).round() * step * 10.0).round() / 10.0
}

fn normal_vitals(rng: &mut ChaCha8Rng) -> TriageVitals {
    let mut g = |mean: f64, sd: f64| Normal::new(mean, sd).expect("valid sd").sample(rng);
    TriageVitals {
        temperature_f: Some(round_to(g(98.3, 0.5), 0.1)),
        heart_rate_bpm: Some(g(80.0, 10.0).round().max(30.0)),
        resp_rate_bpm: Some(g(16.0, 1.5).round().max(6.0)),
        spo2_pct: Some(g(97.5, 1.2).round().clamp(70.0, 100.0)),
        systolic_mmhg: Some(g(128.0, 14.0).round().max(60.0)),
        diastolic_mmhg: Some(g(78.0, 9.0).round().max(30.0)),
        age_years: Some(rng.random_range(18..=92) as f64),
    }
}

fn perturb(v: &mut TriageVitals, p: &VitalPerturbation, rng: &mut ChaCha8Rng) {
    let x = Normal::new(p.mean, p.sd).expect("valid sd").sample(rng).max(1.0);
    match p.vital {
        VitalKind::Temperature => v.temperature_f = Some(round_to(x, 0.1)),
        VitalKind::HeartRate => v.heart_rate_bpm = Some(x.round()),
        VitalKind::RespRate => v.resp_rate_bpm = Some(x.round()),
        VitalKind::Spo2 => v.spo2_pct = Some(x.round().min(100.0)),
        VitalKind::BloodPressure => {
            v.systolic_mmhg = Some(x.round());
            v.diastolic_mmhg = Some((0.6 * x).round());
        }
        VitalKind::Age => {}
    }
}

fn planted_tables(config: &GeneratorConfig) -> PlantedTables {
    let complaints = config
        .complaints
        .iter()
        .map(|c| {
            let mut perturbed = c.symptoms.clone();
            if let Some(p) = &c.perturbation {
                perturbed.extend(p.symptoms.iter().map(|(k, v)| (k.clone(), *v)));
            }
            PlantedComplaint {
                name: c.name.clone(),
                weight: c.weight,
                vital: c.perturbation.as_ref().map(|p| p.vital),
                perturbation_rate: c.perturbation.as_ref().map_or(0.0, |p| p.rate),
                normal: c.symptoms.clone(),
                perturbed,
            }
        })
        .collect();
    PlantedTables {
        complaints,
        triggers: config.triggers.clone(),
        trigger_rate: config.trigger_rate,
        history: config.history.clone(),
        no_history_fraction: config.no_history_fraction,
        background_condition_rate: config.background_condition_rate,
    }
}

fn structured(
    cfg: &StructuredConfig,
    pool: &[(EntryIdx, f64)],
    with_history: bool,
    o: &Ontology,
    rng: &mut ChaCha8Rng,
) -> (Vec<HistoryCount>, Vec<EntryIdx>, Vec<EntryIdx>) {
    let mut counts = Vec::new();
    let mut documented = Vec::new();
    let mut items = Vec::new();
    if with_history {
        let k = rng.random_range(0..=cfg.max_items);
        items = Pools::sample(pool, k, rng);
        items.sort_unstable();
        for &e in &items {
            counts.push(HistoryCount { entry: o.entry(e).id.clone(), count: rng.random_range(1..=cfg.max_count.max(1)) });
            if rng.random_bool(cfg.document) {
                documented.push(e);
            }
        }
    }
    let mut extra = Vec::new();
    if rng.random_bool(cfg.extra_rate) {
        if let Some(e) = Pools::one_not_in(pool, &items, rng) {
            extra.push(e);
        }
    }
    (counts, documented, extra)
}

fn draw_latent(
    config: &GeneratorConfig,
    o: &Ontology,
    pools: &Pools,
    rng: &mut ChaCha8Rng,
) -> Latent {
    let weights: Vec<f64> = config.complaints.iter().map(|c| c.weight).collect();
    let complaint = rand::distr::weighted::WeightedIndex::new(&weights).expect("validated weights").sample(rng);
    let shape = &config.complaints[complaint];
    let mut vitals = normal_vitals(rng);
    let perturbed = match &shape.perturbation {
        Some(p) if rng.random_bool(p.rate) => {
            perturb(&mut vitals, p, rng);
            true
        }
        _ => false,
    };

    let h = &config.history;
    let with_history = !rng.random_bool(config.no_history_fraction);
    let mut ehr = Vec::new();
    let mut history_conditions = Vec::new();
    if with_history {
        let k = rng.random_range(h.min_conditions..=h.max_conditions);
        let mut conditions = Pools::sample(&pools.by_type[ConceptType::Condition.index()], k, rng);
        conditions.sort_unstable();
        for e in conditions {
            let age = (rng.random_range(1.0..h.max_age_days)).round();
            ehr.push(EhrMention { entry: o.entry(e).id.clone(), age_days: age });
            if rng.random_bool(h.p_documented(age).clamp(0.0, 1.0)) {
                history_conditions.push(e);
            }
        }
        let k = rng.random_range(0..=h.max_symptoms);
        let mut symptoms = Pools::sample(&pools.by_type[ConceptType::Symptom.index()], k, rng);
        symptoms.sort_unstable();
        for e in symptoms {
            ehr.push(EhrMention { entry: o.entry(e).id.clone(), age_days: (rng.random_range(1.0..h.max_age_days)).round() });
        }
    }

    let mut new_conditions: Vec<EntryIdx> = Vec::new();
    let mut trigger = None;
    if !config.triggers.is_empty() && rng.random_bool(config.trigger_rate) {
        let t = rng.random_range(0..config.triggers.len());
        trigger = Some(t);
        let planted = &config.triggers[t];
        if rng.random_bool(planted.p_relevant) {
            let members = &pools.bucket_members[&planted.bucket];
            if !members.iter().any(|m| history_conditions.contains(&m.0)) {
                new_conditions.extend(Pools::sample(members, 1, rng));
            }
        }
    }
    if rng.random_bool(config.background_condition_rate) {
        let taken: Vec<EntryIdx> = history_conditions.iter().chain(&new_conditions).copied().collect();
        new_conditions.extend(Pools::one_not_in(&pools.by_type[ConceptType::Condition.index()], &taken, rng));
    }

    let (labs, mut documented_labs, extra_labs) =
        structured(&config.labs, &pools.by_type[ConceptType::Lab.index()], with_history, o, rng);
    documented_labs.extend(extra_labs);
    let (meds, history_meds, new_meds) =
        structured(&config.meds, &pools.by_type[ConceptType::Medication.index()], with_history, o, rng);

    Latent {
        complaint,
        perturbed,
        vitals,
        ehr,
        labs,
        meds,
        trigger,
        history_conditions,
        new_conditions,
        documented_labs,
        history_meds,
        new_meds,
        symptoms: Vec::new(),
    }
}

/// One note section under construction; mention offsets are body-relative.
#[derive(Default)]
struct SectionWriter {
    body: String,
    mentions: Vec<PlantedMention>,
}

impl SectionWriter {
    fn sentence(&mut self) {
        if !self.body.is_empty() {
            self.body.push(' ');
        }
    }

    fn push(&mut self, s: &str) {
        self.body.push_str(s);
    }

    fn list(&mut self, items: &[(EntryIdx, String)], negated: bool) {
        for (i, (e, syn)) in items.iter().enumerate() {
            if i > 0 {
                self.push(if i + 1 == items.len() { " and " } else { ", " });
            }
            let start = self.body.len();
            self.push(syn);
            self.mentions.push(PlantedMention { entry: *e, start, end: self.body.len(), negated });
        }
    }
}

struct Renderer<'a> {
    config: &'a GeneratorConfig,
    o: &'a Ontology,
    exam: HashSet<EntryIdx>,
}

impl Renderer<'_> {
    fn synonym(&self, e: EntryIdx, rng: &mut ChaCha8Rng) -> String {
        let syns = &self.o.entry(e).synonyms;
        if syns.len() == 1 || rng.random_bool(self.config.canonical_name_fraction) {
            syns[0].clone()
        } else {
            syns[rng.random_range(1..syns.len())].clone()
        }
    }

    fn named(&self, es: &[EntryIdx], rng: &mut ChaCha8Rng) -> Vec<(EntryIdx, String)> {
        es.iter().map(|&e| (e, self.synonym(e, rng))).collect()
    }

    fn maybe_distractor(&self, w: &mut SectionWriter, rng: &mut ChaCha8Rng) {
        let d = self.config.distractor_fraction;
        if self.config.distractors.is_empty() || d <= 0.0 {
            return;
        }
        if rng.random_bool((d / (1.0 - d)).min(1.0)) {
            w.sentence();
            w.push(self.config.distractors.choose(rng).expect("nonempty"));
        }
    }

    fn triage_text(&self, l: &Latent, rng: &mut ChaCha8Rng) -> String {
        let age = l.vitals.age_years.unwrap_or(50.0) as u32;
        let sex = if rng.random_bool(0.5) { "m" } else { "f" };
        let mut words: Vec<String> =
            (0..rng.random_range(3..=8)).map(|_| self.config.triage_words.choose(rng).expect("nonempty").clone()).collect();
        if let Some(t) = l.trigger {
            let at = rng.random_range(0..=words.len());
            words.insert(at, self.config.triggers[t].token.to_lowercase());
        }
        format!("{age}{sex} c/o {}. {}", self.config.complaints[l.complaint].name, words.join(" "))
    }

    fn note(&self, l: &Latent, rng: &mut ChaCha8Rng) -> BTreeMap<NoteSection, SectionWriter> {
        let mut sections: BTreeMap<NoteSection, SectionWriter> = BTreeMap::new();
        let age = l.vitals.age_years.unwrap_or(50.0) as u32;
        let who = if rng.random_bool(0.5) { "man" } else { "woman" };

        // The lowest-probability symptoms are the ones written as negated,
        // at most three to stay inside the negation window.
        let neg_count = l.symptoms.iter().filter(|_| rng.random_bool(self.config.negated_symptom_fraction)).count();
        let (positive, negated) = l.symptoms.split_at(l.symptoms.len() - neg_count.min(3));
        let (exam, rest): (Vec<EntryIdx>, Vec<EntryIdx>) = positive.iter().partition(|e| self.exam.contains(e));
        let hpi_n = rest.len().min(2);

        let w = sections.entry(NoteSection::Hpi).or_default();
        if hpi_n > 0 {
            w.push(&format!("{age} yo {who} {} ", HPI_SYMPTOM.choose(rng).expect("nonempty")));
            w.list(&self.named(&rest[..hpi_n], rng), false);
            w.push(".");
        } else {
            w.push(&format!("{age} yo {who} here for evaluation."));
        }
        self.maybe_distractor(w, rng);
        let hist_hpi = l.history_conditions.len().min(2);
        if hist_hpi > 0 {
            w.sentence();
            w.push(&format!("{} ", HISTORY.choose(rng).expect("nonempty")));
            w.list(&self.named(&l.history_conditions[..hist_hpi], rng), false);
            w.push(".");
            self.maybe_distractor(w, rng);
        }

        if l.history_conditions.len() > hist_hpi {
            let w = sections.entry(NoteSection::Pmh).or_default();
            // A bare list leaves the scope inactive.
            if !rng.random_bool(self.config.untriggered_history_fraction) {
                w.push(&format!("{} ", HISTORY.choose(rng).expect("nonempty")));
            }
            w.list(&self.named(&l.history_conditions[hist_hpi..], rng), false);
            w.push(".");
            self.maybe_distractor(w, rng);
        }

        if !l.history_meds.is_empty() {
            let w = sections.entry(NoteSection::Medications).or_default();
            w.push(&format!("{} ", MED_HISTORY.choose(rng).expect("nonempty")));
            w.list(&self.named(&l.history_meds, rng), false);
            w.push(".");
            self.maybe_distractor(w, rng);
        }

        if rest.len() > hpi_n || !negated.is_empty() {
            let w = sections.entry(NoteSection::Ros).or_default();
            if rest.len() > hpi_n {
                w.push(&format!("{} ", ROS_POSITIVE.choose(rng).expect("nonempty")));
                w.list(&self.named(&rest[hpi_n..], rng), false);
                w.push(".");
                self.maybe_distractor(w, rng);
            }
            if !negated.is_empty() {
                w.sentence();
                w.push("denies ");
                w.list(&self.named(&negated, rng), true);
                w.push(".");
                self.maybe_distractor(w, rng);
            }
        }

        let w = sections.entry(NoteSection::PhysicalExam).or_default();
        if exam.is_empty() {
            w.push("exam unremarkable.");
        } else {
            w.push("notable for ");
            w.list(&self.named(&exam, rng), false);
            w.push(".");
        }
        self.maybe_distractor(w, rng);

        let mdm = !l.documented_labs.is_empty() || !l.new_conditions.is_empty() || !l.new_meds.is_empty();
        if mdm {
            let w = sections.entry(NoteSection::Mdm).or_default();
            if !l.documented_labs.is_empty() {
                w.push(&format!("{} ", LABS.choose(rng).expect("nonempty")));
                w.list(&self.named(&l.documented_labs, rng), false);
                w.push(".");
                self.maybe_distractor(w, rng);
            }
            if !l.new_conditions.is_empty() {
                w.sentence();
                w.push("concern for ");
                w.list(&self.named(&l.new_conditions, rng), false);
                w.push(".");
                self.maybe_distractor(w, rng);
            }
            if !l.new_meds.is_empty() {
                w.sentence();
                w.push(&format!("{} ", MED_NEW.choose(rng).expect("nonempty")));
                w.list(&self.named(&l.new_meds, rng), false);
                w.push(".");
            }
        }
        sections
    }
}

/// Assembles the note and moves mention offsets into rendered-text
/// coordinates, mirroring [`Note::render`].
fn assemble(sections: BTreeMap<NoteSection, SectionWriter>) -> (Note, Vec<PlantedMention>) {
    let mut note = Note::default();
    let mut mentions = Vec::new();
    let mut offset = 0usize;
    for (i, (section, w)) in sections.into_iter().enumerate() {
        if i > 0 {
            offset += 2;
        }
        let header = section.header();
        offset += header.len() + 2;
        mentions.extend(w.mentions.into_iter().map(|m| PlantedMention { start: m.start + offset, end: m.end + offset, ..m }));
        offset += w.body.len();
        note.sections.insert(header.to_string(), w.body);
    }
    (note, mentions)
}

/// Words the generator writes outside of concept mentions; filler synonyms
/// must avoid them.
fn reserved_words(config: &GeneratorConfig) -> HashSet<String> {
    let mut out: HashSet<String> = HashSet::new();
    let lexicon = TriggerLexicon::default();
    let phrases = HPI_SYMPTOM
        .iter()
        .chain(&HISTORY)
        .chain(&ROS_POSITIVE)
        .chain(&MED_HISTORY)
        .chain(&MED_NEW)
        .chain(&LABS)
        .chain(&TEMPLATE_WORDS)
        .map(|s| s.to_string())
        .chain(config.distractors.iter().cloned())
        .chain(config.triage_words.iter().cloned())
        .chain(config.complaints.iter().map(|c| c.name.clone()))
        .chain(config.triggers.iter().map(|t| t.token.clone()))
        .chain(lexicon.to_file().triggers.keys().cloned());
    for p in phrases {
        out.extend(words_lower(&p));
    }
    out
}

/// Generates a corpus over `base`. Identical configs give identical output.
pub fn generate_corpus(config: &GeneratorConfig, base: &Ontology) -> Result<GeneratedCorpus, GeneratorError> {
    config.validate(base)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let pools = Pools::new(base);
    let tables = planted_tables(config);

    let mut latent: Vec<Latent> = (0..config.visits).map(|_| draw_latent(config, base, &pools, &mut rng)).collect();

    let mut cells: BTreeMap<(usize, bool), Vec<usize>> = BTreeMap::new();
    for (i, l) in latent.iter().enumerate() {
        cells.entry((l.complaint, l.perturbed)).or_default().push(i);
    }
    for ((c, perturbed), members) in &cells {
        for (s, &p) in tables.complaints[*c].table(*perturbed) {
            let e = base.find(s).ok_or_else(|| GeneratorError::UnknownEntry(s.clone()))?;
            let n = members.len();
            let k = ((n as f64 * p + rng.random::<f64>()).floor() as usize).min(n);
            for j in index::sample(&mut rng, n, k) {
                latent[members[j]].symptoms.push(e);
            }
        }
    }
    for l in &mut latent {
        let t = tables.complaints[l.complaint].table(l.perturbed);
        let p = |e: &EntryIdx| t.get(&base.entry(*e).id).copied().unwrap_or(0.0);
        l.symptoms.sort_by(|a, b| p(b).total_cmp(&p(a)).then(a.cmp(b)));
    }

    let exam: HashSet<EntryIdx> = EXAM_FINDINGS.iter().filter_map(|id| base.find(id)).collect();
    let renderer = Renderer { config, o: base, exam };
    let mut visits = Vec::with_capacity(latent.len());
    for (i, l) in latent.into_iter().enumerate() {
        let triage_text = renderer.triage_text(&l, &mut rng);
        let (note, mentions) = assemble(renderer.note(&l, &mut rng));
        let context = PatientContext {
            patient_id: format!("p{i:05}"),
            triage_text,
            chief_complaint: config.complaints[l.complaint].name.clone(),
            vitals: l.vitals,
            ehr: l.ehr,
            labs: l.labs,
            meds: l.meds,
            has_history: None,
        };
        visits.push(GeneratedVisit {
            visit: Visit { context, note },
            complaint: l.complaint,
            perturbed: l.perturbed,
            trigger: l.trigger,
            mentions,
        });
    }

    let test_start = ((1.0 - config.test_fraction) * visits.len() as f64).round() as usize;
    let mut counts = vec![0u64; base.len()];
    for v in &visits[..test_start] {
        let distinct: BTreeSet<EntryIdx> = v.mentions.iter().map(|m| m.entry).collect();
        for e in distinct {
            counts[e.get()] += 1;
        }
    }
    let mut file = base.to_file();
    for rec in &mut file.entries {
        rec.frequency = base.find(&rec.id).map_or(0, |e| counts[e.get()]);
    }
    if config.total_synonyms > 0 {
        file = expand_ontology(&file, config.total_synonyms, &reserved_words(config), config.seed);
    }
    Ok(GeneratedCorpus { ontology: file, visits, tables, test_start })
}
