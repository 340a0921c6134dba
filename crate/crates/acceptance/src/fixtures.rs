//! Random ontologies and texts for the oracle comparisons.

use std::collections::{BTreeSet, HashSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use scribe_core::ontology::{BucketRecord, ConceptType, EntryRecord, OntologyFile};

use crate::oracle::{OracleEntry, TermFixture};

/// Small vocabulary so synonyms collide with text often. Includes negation
/// words, terminators and non-ASCII letters.
const WORDS: [&str; 28] = [
    "fever", "chest", "pain", "cough", "no", "not", "denies", "negative", "for", "free", "of", "without", "but",
    "which", "h/o", "w/", "acute", "renal", "failure", "left", "leg", "swelling", "café", "ödem", "x", "2", "never",
    "had",
];
const PUNCT: [&str; 9] = [",", ".", ";", ":", "(", ")", "-", "'", "?"];
const GAPS: [&str; 5] = [" ", " ", "  ", "\n", "\t"];

fn synonym(rng: &mut impl Rng) -> String {
    let n = rng.random_range(1..=3);
    (0..n).map(|_| *WORDS.choose(rng).expect("nonempty")).collect::<Vec<_>>().join(" ")
}

/// An ontology of at most `max_synonyms` synonyms over all four types.
/// Synonyms are unique within a type and often shared across types.
pub fn random_ontology(rng: &mut impl Rng, max_synonyms: usize) -> OntologyFile {
    let mut used: [HashSet<String>; 4] = Default::default();
    let mut entries = Vec::new();
    let mut total = 0;
    let target = rng.random_range(1..=max_synonyms);
    let mut attempts = 0;
    while total < target && attempts < 20 * max_synonyms {
        attempts += 1;
        let t = *ConceptType::ALL.choose(rng).expect("nonempty");
        let want = rng.random_range(1..=3).min(target - total);
        let mut syns: Vec<String> = Vec::new();
        for _ in 0..want {
            let s = synonym(rng);
            if !used[t.index()].contains(&s) && !syns.contains(&s) {
                syns.push(s);
            }
        }
        if syns.is_empty() {
            continue;
        }
        used[t.index()].extend(syns.iter().cloned());
        total += syns.len();
        let i = entries.len();
        let bucket = match t {
            ConceptType::Condition => Some(format!("cb{}", rng.random_range(0..3))),
            ConceptType::Symptom => Some(format!("sb{}", rng.random_range(0..3))),
            _ => None,
        };
        entries.push(EntryRecord {
            id: format!("e{:03}", rng.random_range(0..1000) * 1000 + i),
            name: syns[0].clone(),
            synonyms: syns[1..].to_vec(),
            cuis: vec![format!("C{i:05}")],
            concept_type: t,
            bucket: bucket.filter(|_| t == ConceptType::Condition || rng.random_bool(0.8)),
            frequency: rng.random_range(0..4),
        });
    }
    let ids: BTreeSet<String> = entries.iter().filter_map(|e| e.bucket.clone()).collect();
    let buckets = ids.into_iter().map(|id| BucketRecord { name: format!("bucket {id}"), id }).collect();
    OntologyFile { buckets, entries }
}

pub fn oracle_entries(file: &OntologyFile) -> Vec<OracleEntry> {
    file.entries
        .iter()
        .map(|e| OracleEntry {
            id: e.id.clone(),
            synonyms: std::iter::once(&e.name).chain(&e.synonyms).cloned().collect(),
            frequency: e.frequency,
        })
        .collect()
}

fn styled(rng: &mut impl Rng, w: &str) -> String {
    match rng.random_range(0..6) {
        0 => w.to_uppercase(),
        1 => {
            let mut c = w.chars();
            c.next().map_or_else(String::new, |f| f.to_uppercase().chain(c).collect())
        }
        _ => w.to_string(),
    }
}

/// Words, punctuation and whitespace, at most `max_chars` characters.
pub fn random_text(rng: &mut impl Rng, max_chars: usize) -> String {
    let budget = rng.random_range(0..=max_chars);
    let mut out = String::new();
    while out.chars().count() < budget {
        let piece = if rng.random_bool(0.8) {
            let w = *WORDS.choose(rng).expect("nonempty");
            styled(rng, w)
        } else {
            PUNCT.choose(rng).expect("nonempty").to_string()
        };
        out.push_str(&piece);
        if rng.random_bool(0.9) {
            out.push_str(GAPS.choose(rng).expect("nonempty"));
        }
    }
    out.chars().take(budget).collect()
}

/// Condition entries for the term-ordering fixtures, with bucket ids, plus
/// the record and bucket ranking to order them under.
pub struct TermCase {
    pub ontology: OntologyFile,
    pub terms: Vec<TermFixture>,
    /// Bucket ids, best first; possibly a strict subset.
    pub bucket_ranking: Vec<String>,
}

pub fn random_term_case(rng: &mut impl Rng) -> TermCase {
    let nb = rng.random_range(1..=6);
    let n = rng.random_range(1..=30);
    let mut ids: BTreeSet<String> = BTreeSet::new();
    while ids.len() < n {
        ids.insert(format!("c{:04}", rng.random_range(0..10_000)));
    }
    let mut entries = Vec::new();
    let mut terms = Vec::new();
    for (i, id) in ids.into_iter().enumerate() {
        let bucket = format!("cb{}", rng.random_range(0..nb));
        let frequency = rng.random_range(0..4);
        entries.push(EntryRecord {
            id: id.clone(),
            name: format!("term{i}"),
            synonyms: vec![],
            cuis: vec![format!("C{i:05}")],
            concept_type: ConceptType::Condition,
            bucket: Some(bucket.clone()),
            frequency,
        });
        terms.push(TermFixture { id, bucket, frequency, in_ehr: rng.random_bool(0.2) });
    }
    // Symptoms never appear in a condition ranking.
    entries.push(EntryRecord {
        id: "s0".into(),
        name: "somesymptom".into(),
        synonyms: vec![],
        cuis: vec!["S0".into()],
        concept_type: ConceptType::Symptom,
        bucket: None,
        frequency: 99,
    });
    let used: BTreeSet<String> = terms.iter().map(|t| t.bucket.clone()).collect();
    let buckets: Vec<BucketRecord> =
        used.iter().map(|id| BucketRecord { id: id.clone(), name: format!("conditions {id}") }).collect();
    let mut bucket_ranking: Vec<String> = used.into_iter().collect();
    bucket_ranking.shuffle(rng);
    let keep = rng.random_range(0..=bucket_ranking.len());
    bucket_ranking.truncate(keep);
    entries.shuffle(rng);
    TermCase { ontology: OntologyFile { buckets, entries }, terms, bucket_ranking }
}
