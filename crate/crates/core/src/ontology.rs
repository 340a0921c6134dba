//! Concept vocabulary: entries, synonyms, concept types and the roll-up of
//! entries into relevancy buckets.
//!
//! The on-disk format is a JSON object `{ "buckets": [...], "entries": [...] }`.
//! Entries of type `LAB` or `MEDICATION` (and `SYMPTOM` entries without an
//! explicit bucket) receive an implicit singleton bucket at load time so every
//! entry has a bucket index. Conditions must name a declared bucket.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::text::{is_token_sequence, normalize_synonym};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ConceptType {
    Condition,
    Symptom,
    Lab,
    Medication,
}

impl ConceptType {
    pub const ALL: [ConceptType; 4] =
        [ConceptType::Condition, ConceptType::Symptom, ConceptType::Lab, ConceptType::Medication];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ConceptType::Condition => "CONDITION",
            ConceptType::Symptom => "SYMPTOM",
            ConceptType::Lab => "LAB",
            ConceptType::Medication => "MEDICATION",
        }
    }
}

impl fmt::Display for ConceptType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConceptType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ConceptType::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown concept type {s:?}"))
    }
}

/// Dense position of an entry inside an [`Ontology`] (entries are ordered by id).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntryIdx(pub u32);

impl EntryIdx {
    pub fn get(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptEntry {
    pub id: String,
    pub name: String,
    /// Normalized synonyms; the normalized canonical name is always first.
    pub synonyms: Vec<String>,
    pub cuis: BTreeSet<String>,
    pub concept_type: ConceptType,
    pub bucket: String,
    pub frequency: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelevancyBucket {
    pub id: String,
    pub name: String,
    pub members: Vec<EntryIdx>,
    pub index: usize,
    /// Generated at load time rather than declared in the file.
    pub implicit: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum OntologyError {
    #[error("reading ontology: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing ontology: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("synonym {synonym:?} is claimed by two {concept_type} entries: {first} and {second}")]
    DuplicateSynonym { synonym: String, concept_type: ConceptType, first: String, second: String },
    #[error("entry {entry} references unknown bucket {bucket:?}")]
    MissingBucket { entry: String, bucket: String },
    #[error("duplicate entry id {0}")]
    DuplicateEntry(String),
    #[error("duplicate bucket id {0}")]
    DuplicateBucket(String),
    #[error("bucket {0} has no member entries")]
    EmptyBucket(String),
    #[error("cui {cui} belongs to both {first} and {second}")]
    DuplicateCui { cui: String, first: String, second: String },
    #[error("entry {0} has no cuis")]
    EmptyCuis(String),
    #[error("bucket {bucket} mixes concept types")]
    MixedBucket { bucket: String },
    #[error("entry {entry}: synonym {synonym:?} is not a sequence of word tokens")]
    InvalidSynonym { entry: String, synonym: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketRecord {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryRecord {
    pub id: String,
    pub name: String,
    pub synonyms: Vec<String>,
    pub cuis: Vec<String>,
    #[serde(rename = "type")]
    pub concept_type: ConceptType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bucket: Option<String>,
    #[serde(default)]
    pub frequency: u64,
}

/// Serialized ontology, as read from and written to disk.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OntologyFile {
    pub buckets: Vec<BucketRecord>,
    pub entries: Vec<EntryRecord>,
}

/// One prefix-lookup hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrefixMatch<'a> {
    pub entry: EntryIdx,
    pub synonym: &'a str,
}

/// Sorted `(synonym, entry)` pairs of one concept type; a prefix query is a
/// binary search to the first candidate followed by a scan.
#[derive(Debug, Default)]
struct SynonymIndex {
    pairs: Vec<(String, EntryIdx)>,
}

impl SynonymIndex {
    fn range<'a, 'p>(&'a self, prefix: &'p str) -> impl Iterator<Item = (&'a str, EntryIdx)> + use<'a, 'p> {
        let from = self.pairs.partition_point(|(s, _)| s.as_str() < prefix);
        self.pairs[from..]
            .iter()
            .take_while(move |(s, _)| s.starts_with(prefix))
            .map(|(s, e)| (s.as_str(), *e))
    }
}

#[derive(Debug)]
pub struct Ontology {
    entries: Vec<ConceptEntry>,
    entry_lookup: HashMap<String, EntryIdx>,
    entry_bucket: Vec<usize>,
    buckets: Vec<RelevancyBucket>,
    bucket_lookup: HashMap<String, usize>,
    by_type: [Vec<EntryIdx>; 4],
    buckets_by_type: [Vec<usize>; 4],
    synonyms: [SynonymIndex; 4],
}

impl PartialEq for Ontology {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries && self.buckets == other.buckets
    }
}

impl Ontology {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, OntologyError> {
        let raw = std::fs::read_to_string(path)?;
        Self::from_json(&raw)
    }

    pub fn from_json(raw: &str) -> Result<Self, OntologyError> {
        let file: OntologyFile = serde_json::from_str(raw)?;
        Self::from_file(file)
    }

    /// The small hand-written ontology shipped with the crate.
    pub fn demo() -> Self {
        Self::from_json(include_str!("../data/demo_ontology.json"))
            .expect("bundled demo ontology is valid")
    }

    pub fn from_file(file: OntologyFile) -> Result<Self, OntologyError> {
        let mut declared: Vec<BucketRecord> = file.buckets;
        declared.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in declared.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(OntologyError::DuplicateBucket(pair[0].id.clone()));
            }
        }

        let mut records = file.entries;
        records.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in records.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(OntologyError::DuplicateEntry(pair[0].id.clone()));
            }
        }

        let declared_ids: HashMap<&str, &BucketRecord> =
            declared.iter().map(|b| (b.id.as_str(), b)).collect();

        let mut entries = Vec::with_capacity(records.len());
        let mut implicit: Vec<BucketRecord> = Vec::new();
        let mut cui_owner: HashMap<String, String> = HashMap::new();
        let mut synonym_owner: HashMap<(ConceptType, String), String> = HashMap::new();

        for rec in records {
            let mut synonyms = Vec::with_capacity(rec.synonyms.len() + 1);
            for raw in std::iter::once(&rec.name).chain(rec.synonyms.iter()) {
                let syn = normalize_synonym(raw);
                if !is_token_sequence(&syn) {
                    return Err(OntologyError::InvalidSynonym { entry: rec.id.clone(), synonym: raw.clone() });
                }
                if !synonyms.contains(&syn) {
                    synonyms.push(syn);
                }
            }
            for syn in &synonyms {
                if let Some(first) = synonym_owner.insert((rec.concept_type, syn.clone()), rec.id.clone()) {
                    return Err(OntologyError::DuplicateSynonym {
                        synonym: syn.clone(),
                        concept_type: rec.concept_type,
                        first,
                        second: rec.id,
                    });
                }
            }

            if rec.cuis.is_empty() {
                return Err(OntologyError::EmptyCuis(rec.id));
            }
            let cuis: BTreeSet<String> = rec.cuis.iter().cloned().collect();
            for cui in &cuis {
                if let Some(first) = cui_owner.insert(cui.clone(), rec.id.clone()) {
                    return Err(OntologyError::DuplicateCui { cui: cui.clone(), first, second: rec.id });
                }
            }

            let bucket = match (&rec.bucket, rec.concept_type) {
                (Some(b), _) => {
                    if !declared_ids.contains_key(b.as_str()) {
                        return Err(OntologyError::MissingBucket { entry: rec.id, bucket: b.clone() });
                    }
                    b.clone()
                }
                (None, ConceptType::Condition) => {
                    return Err(OntologyError::MissingBucket { entry: rec.id, bucket: String::new() });
                }
                (None, _) => {
                    let id = format!("auto:{}", rec.id);
                    implicit.push(BucketRecord { id: id.clone(), name: rec.name.clone() });
                    id
                }
            };

            entries.push(ConceptEntry {
                id: rec.id,
                name: rec.name,
                synonyms,
                cuis,
                concept_type: rec.concept_type,
                bucket,
                frequency: rec.frequency,
            });
        }

        let mut buckets: Vec<RelevancyBucket> = declared
            .iter()
            .map(|b| (b, false))
            .chain(implicit.iter().map(|b| (b, true)))
            .enumerate()
            .map(|(index, (b, implicit))| RelevancyBucket {
                id: b.id.clone(),
                name: b.name.clone(),
                members: Vec::new(),
                index,
                implicit,
            })
            .collect();
        let bucket_lookup: HashMap<String, usize> =
            buckets.iter().map(|b| (b.id.clone(), b.index)).collect();

        let mut entry_lookup = HashMap::with_capacity(entries.len());
        let mut entry_bucket = Vec::with_capacity(entries.len());
        let mut by_type: [Vec<EntryIdx>; 4] = Default::default();
        let mut synonyms: [SynonymIndex; 4] = Default::default();
        for (i, e) in entries.iter().enumerate() {
            let idx = EntryIdx(i as u32);
            entry_lookup.insert(e.id.clone(), idx);
            let b = bucket_lookup[&e.bucket];
            entry_bucket.push(b);
            buckets[b].members.push(idx);
            by_type[e.concept_type.index()].push(idx);
            for s in &e.synonyms {
                synonyms[e.concept_type.index()].pairs.push((s.clone(), idx));
            }
        }
        let mut buckets_by_type: [Vec<usize>; 4] = Default::default();
        for b in &buckets {
            let Some(first) = b.members.first() else {
                return Err(OntologyError::EmptyBucket(b.id.clone()));
            };
            let t = entries[first.get()].concept_type;
            if b.members.iter().any(|m| entries[m.get()].concept_type != t) {
                return Err(OntologyError::MixedBucket { bucket: b.id.clone() });
            }
            buckets_by_type[t.index()].push(b.index);
        }
        for index in &mut synonyms {
            index.pairs.sort();
        }

        Ok(Self { entries, entry_lookup, entry_bucket, buckets, bucket_lookup, by_type, buckets_by_type, synonyms })
    }

    /// Canonical serialized form: declared buckets and entries by id ascending,
    /// implicit buckets omitted.
    pub fn to_file(&self) -> OntologyFile {
        let buckets = self
            .buckets
            .iter()
            .filter(|b| !b.implicit)
            .map(|b| BucketRecord { id: b.id.clone(), name: b.name.clone() })
            .collect();
        let entries = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| EntryRecord {
                id: e.id.clone(),
                name: e.name.clone(),
                synonyms: e.synonyms.clone(),
                cuis: e.cuis.iter().cloned().collect(),
                concept_type: e.concept_type,
                bucket: (!self.buckets[self.entry_bucket[i]].implicit).then(|| e.bucket.clone()),
                frequency: e.frequency,
            })
            .collect();
        OntologyFile { buckets, entries }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("ontology serializes")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    pub fn synonym_count(&self) -> usize {
        self.synonyms.iter().map(|s| s.pairs.len()).sum()
    }

    pub fn entries(&self) -> &[ConceptEntry] {
        &self.entries
    }

    pub fn entry(&self, idx: EntryIdx) -> &ConceptEntry {
        &self.entries[idx.get()]
    }

    pub fn buckets(&self) -> &[RelevancyBucket] {
        &self.buckets
    }

    pub fn bucket(&self, index: usize) -> &RelevancyBucket {
        &self.buckets[index]
    }

    pub fn bucket_by_id(&self, id: &str) -> Option<&RelevancyBucket> {
        self.bucket_lookup.get(id).map(|&i| &self.buckets[i])
    }

    pub fn find(&self, entry_id: &str) -> Option<EntryIdx> {
        self.entry_lookup.get(entry_id).copied()
    }

    /// Entries of one concept type, in id order.
    pub fn entries_of(&self, t: ConceptType) -> &[EntryIdx] {
        &self.by_type[t.index()]
    }

    /// Indices of the buckets whose members are of type `t`, ascending.
    pub fn buckets_of_type(&self, t: ConceptType) -> &[usize] {
        &self.buckets_by_type[t.index()]
    }

    /// Concept type shared by a bucket's members.
    pub fn bucket_type(&self, index: usize) -> ConceptType {
        self.entry(self.buckets[index].members[0]).concept_type
    }

    pub fn bucket_index(&self, idx: EntryIdx) -> usize {
        self.entry_bucket[idx.get()]
    }

    /// Dense bucket index of the entry with the given id.
    pub fn bucket_of(&self, entry_id: &str) -> Option<usize> {
        self.find(entry_id).map(|e| self.bucket_index(e))
    }

    /// Every entry with a synonym starting with `prefix`, each once with its
    /// shortest matching synonym, ordered by empirical frequency descending
    /// and then entry id.
    pub fn lookup_prefix(&self, prefix: &str, type_filter: Option<ConceptType>) -> Vec<PrefixMatch<'_>> {
        let mut best: HashMap<EntryIdx, &str> = HashMap::new();
        for t in ConceptType::ALL {
            if type_filter.is_some_and(|f| f != t) {
                continue;
            }
            self.collect_prefix(t, prefix, &mut best);
        }
        let mut out: Vec<PrefixMatch<'_>> =
            best.into_iter().map(|(entry, synonym)| PrefixMatch { entry, synonym }).collect();
        out.sort_by(|a, b| {
            self.entry(b.entry)
                .frequency
                .cmp(&self.entry(a.entry).frequency)
                .then(a.entry.cmp(&b.entry))
        });
        out
    }

    /// Prefix matches of one type keyed by entry; used on the suggestion path
    /// where the caller supplies the ordering.
    pub fn prefix_matches(&self, t: ConceptType, prefix: &str) -> HashMap<EntryIdx, &str> {
        let mut best = HashMap::new();
        self.collect_prefix(t, prefix, &mut best);
        best
    }

    fn collect_prefix<'a>(&'a self, t: ConceptType, prefix: &str, best: &mut HashMap<EntryIdx, &'a str>) {
        for (syn, entry) in self.synonyms[t.index()].range(prefix) {
            best.entry(entry)
                .and_modify(|cur: &mut &str| {
                    if (syn.len(), syn) < (cur.len(), *cur) {
                        *cur = syn;
                    }
                })
                .or_insert(syn);
        }
    }

    /// True when some synonym of any type starts with `prefix`.
    pub fn has_prefix(&self, prefix: &str) -> bool {
        self.synonyms.iter().any(|s| s.range(prefix).next().is_some())
    }

    /// Shortest synonym of an entry (ties broken lexicographically).
    pub fn shortest_synonym(&self, idx: EntryIdx) -> &str {
        self.entry(idx)
            .synonyms
            .iter()
            .min_by(|a, b| (a.len(), a.as_str()).cmp(&(b.len(), b.as_str())))
            .map(String::as_str)
            .expect("entries have at least one synonym")
    }

    /// Every (normalized synonym, entry) pair across all types.
    pub fn all_synonyms(&self) -> impl Iterator<Item = (&str, EntryIdx)> {
        self.synonyms.iter().flat_map(|s| s.pairs.iter().map(|(syn, e)| (syn.as_str(), *e)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const FIXTURE: &str = r#"{
      "buckets": [
        {"id": "b_hld", "name": "Hyperlipidemia"},
        {"id": "b_htn", "name": "Hypertension"}
      ],
      "entries": [
        {"id": "e_htn", "name": "hypertension", "synonyms": ["htn", "high blood pressure"],
         "cuis": ["X1"], "type": "CONDITION", "bucket": "b_htn", "frequency": 50},
        {"id": "e_hld", "name": "hyperlipidemia", "synonyms": ["hld"],
         "cuis": ["X2", "X3"], "type": "CONDITION", "bucket": "b_hld", "frequency": 30},
        {"id": "e_ldl", "name": "increased LDL", "synonyms": ["high ldl"],
         "cuis": ["X4"], "type": "CONDITION", "bucket": "b_hld", "frequency": 5}
      ]
    }"#;

    #[test]
    fn loads_fixture() {
        let o = Ontology::from_json(FIXTURE).unwrap();
        assert_eq!(o.len(), 3);
        assert_eq!(o.bucket_count(), 2);
        assert_eq!(o.bucket_of("e_hld"), o.bucket_of("e_ldl"));
        assert_ne!(o.bucket_of("e_hld"), o.bucket_of("e_htn"));
        let htn = o.entry(o.find("e_htn").unwrap());
        assert_eq!(htn.synonyms[0], "hypertension");
        assert!(htn.synonyms.contains(&"htn".to_string()));
    }

    #[test]
    fn intra_type_duplicate_synonym_is_rejected() {
        let raw = r#"{"buckets":[{"id":"b","name":"B"}],"entries":[
          {"id":"ms1","name":"multiple sclerosis","synonyms":["ms"],"cuis":["A"],"type":"CONDITION","bucket":"b"},
          {"id":"ms2","name":"mitral stenosis","synonyms":["MS"],"cuis":["B"],"type":"CONDITION","bucket":"b"}]}"#;
        match Ontology::from_json(raw) {
            Err(OntologyError::DuplicateSynonym { synonym, first, second, .. }) => {
                assert_eq!(synonym, "ms");
                assert_eq!((first.as_str(), second.as_str()), ("ms1", "ms2"));
            }
            other => panic!("expected duplicate synonym error, got {other:?}"),
        }
    }

    #[test]
    fn cross_type_duplicate_is_allowed() {
        let raw = r#"{"buckets":[{"id":"b","name":"B"}],"entries":[
          {"id":"c","name":"depression","synonyms":[],"cuis":["A"],"type":"CONDITION","bucket":"b"},
          {"id":"s","name":"depression","synonyms":[],"cuis":["B"],"type":"SYMPTOM"}]}"#;
        let o = Ontology::from_json(raw).unwrap();
        assert_eq!(o.lookup_prefix("depr", None).len(), 2);
        assert_eq!(o.lookup_prefix("depr", Some(ConceptType::Symptom)).len(), 1);
    }

    #[test]
    fn missing_bucket_is_rejected() {
        let raw = r#"{"buckets":[],"entries":[
          {"id":"c","name":"copd","synonyms":[],"cuis":["A"],"type":"CONDITION","bucket":"nope"}]}"#;
        assert!(matches!(Ontology::from_json(raw), Err(OntologyError::MissingBucket { .. })));
        let raw = r#"{"buckets":[],"entries":[
          {"id":"c","name":"copd","synonyms":[],"cuis":["A"],"type":"CONDITION"}]}"#;
        assert!(matches!(Ontology::from_json(raw), Err(OntologyError::MissingBucket { .. })));
    }

    #[test]
    fn other_validation_errors() {
        let dup_cui = r#"{"buckets":[],"entries":[
          {"id":"a","name":"hct","synonyms":[],"cuis":["A"],"type":"LAB"},
          {"id":"b","name":"hgb","synonyms":[],"cuis":["A"],"type":"LAB"}]}"#;
        assert!(matches!(Ontology::from_json(dup_cui), Err(OntologyError::DuplicateCui { .. })));
        let no_cui = r#"{"buckets":[],"entries":[{"id":"a","name":"hct","synonyms":[],"cuis":[],"type":"LAB"}]}"#;
        assert!(matches!(Ontology::from_json(no_cui), Err(OntologyError::EmptyCuis(_))));
        let bad_syn = r#"{"buckets":[],"entries":[{"id":"a","name":"t-cell count","synonyms":[],"cuis":["A"],"type":"LAB"}]}"#;
        assert!(matches!(Ontology::from_json(bad_syn), Err(OntologyError::InvalidSynonym { .. })));
        let empty_bucket = r#"{"buckets":[{"id":"b","name":"B"}],"entries":[]}"#;
        assert!(matches!(Ontology::from_json(empty_bucket), Err(OntologyError::EmptyBucket(_))));
    }

    #[test]
    fn labs_get_singleton_buckets() {
        let raw = r#"{"buckets":[],"entries":[
          {"id":"hct","name":"hematocrit","synonyms":["hct"],"cuis":["A"],"type":"LAB"},
          {"id":"glu","name":"glucose","synonyms":[],"cuis":["B"],"type":"LAB"}]}"#;
        let o = Ontology::from_json(raw).unwrap();
        assert_eq!(o.bucket_count(), 2);
        let b = o.bucket(o.bucket_of("hct").unwrap());
        assert!(b.implicit);
        assert_eq!(b.members.len(), 1);
    }

    #[test]
    fn prefix_lookup() {
        let o = Ontology::from_json(FIXTURE).unwrap();
        let hits = o.lookup_prefix("h", Some(ConceptType::Condition));
        assert_eq!(hits.len(), 3);
        // frequency order, shortest matching synonym per entry
        assert_eq!(o.entry(hits[0].entry).id, "e_htn");
        assert_eq!(hits[0].synonym, "htn");
        assert_eq!(hits[2].synonym, "high ldl");
        assert!(o.lookup_prefix("zzzz", None).is_empty());
        assert_eq!(o.lookup_prefix("", Some(ConceptType::Condition)).len(), 3);
        assert!(o.lookup_prefix("", Some(ConceptType::Lab)).is_empty());
    }

    #[test]
    fn canonical_round_trip() {
        let o = Ontology::from_json(FIXTURE).unwrap();
        let again = Ontology::from_json(&o.to_json()).unwrap();
        assert_eq!(o, again);
        assert_eq!(o.to_file(), again.to_file());
    }
}
