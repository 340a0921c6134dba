use std::collections::{BTreeSet, HashSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ontology::{ConceptType, EntryRecord, OntologyFile};
use crate::text::{normalize_synonym, words_lower};

const ONSETS: [&str; 18] = ["b", "br", "c", "d", "f", "g", "gl", "k", "l", "m", "n", "p", "pr", "r", "s", "t", "tr", "v"];
const VOWELS: [&str; 6] = ["a", "e", "i", "o", "u", "y"];
const CODAS: [&str; 8] = ["", "", "n", "l", "r", "s", "x", "m"];
const SUFFIXES: [&str; 8] = ["syndrome", "disease", "disorder", "pain", "lesion", "deficiency", "reflex", "spasm"];

fn word(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.random_range(2..=4);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(ONSETS.choose(rng).expect("nonempty"));
        w.push_str(VOWELS.choose(rng).expect("nonempty"));
        w.push_str(CODAS.choose(rng).expect("nonempty"));
    }
    w
}

/// Adds filler entries to `base` until it holds at least `total_synonyms`
/// synonyms. Fillers are conditions and symptoms placed in the existing
/// buckets of their type, with ids that sort after every base id, so entry
/// and bucket indices of the base ontology are unchanged. None of their
/// words occur in `reserved` or in a base synonym.
pub fn expand_ontology(
    base: &OntologyFile,
    total_synonyms: usize,
    reserved: &HashSet<String>,
    seed: u64,
) -> OntologyFile {
    let mut out = base.clone();
    let mut have: usize = base
        .entries
        .iter()
        .map(|e| {
            let set: HashSet<String> =
                std::iter::once(&e.name).chain(&e.synonyms).map(|s| normalize_synonym(s)).collect();
            set.len()
        })
        .sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut banned: HashSet<String> = reserved.clone();
    for e in &base.entries {
        for s in std::iter::once(&e.name).chain(&e.synonyms) {
            banned.extend(words_lower(s));
        }
    }
    let buckets_of = |t: ConceptType| -> Vec<String> {
        let set: BTreeSet<String> =
            base.entries.iter().filter(|e| e.concept_type == t).filter_map(|e| e.bucket.clone()).collect();
        set.into_iter().collect()
    };
    let pools = [(ConceptType::Condition, "zc", buckets_of(ConceptType::Condition)), (ConceptType::Symptom, "zs", buckets_of(ConceptType::Symptom))];
    let mut used: HashSet<String> = HashSet::new();
    let mut fresh = |rng: &mut ChaCha8Rng| loop {
        let w = word(rng);
        if !banned.contains(&w) && used.insert(w.clone()) {
            return w;
        }
    };
    let mut serial = 0usize;
    while have < total_synonyms {
        let (t, prefix, buckets) = &pools[serial % pools.len()];
        if buckets.is_empty() {
            serial += 1;
            if pools.iter().all(|p| p.2.is_empty()) {
                break;
            }
            continue;
        }
        let head = fresh(&mut rng);
        let name = format!("{head} {}", SUFFIXES.choose(&mut rng).expect("nonempty"));
        let n_syn = rng.random_range(2..=5);
        let mut synonyms = vec![head.clone()];
        while synonyms.len() < n_syn {
            synonyms.push(fresh(&mut rng));
        }
        have += 1 + synonyms.len();
        out.entries.push(EntryRecord {
            id: format!("{prefix}_{serial:05}"),
            name,
            synonyms,
            cuis: vec![format!("X{serial:07}")],
            concept_type: *t,
            bucket: Some(buckets[rng.random_range(0..buckets.len())].clone()),
            frequency: 0,
        });
        serial += 1;
    }
    out
}
