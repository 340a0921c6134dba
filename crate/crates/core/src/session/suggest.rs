use serde::{Deserialize, Serialize};

use crate::ontology::{ConceptType, EntryIdx, Ontology};
use crate::ranking::RankedList;
use crate::session::scope::ScopeState;
use crate::text::normalize_synonym;

/// Default number of visible suggestions.
pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suggestion {
    pub entry: EntryIdx,
    /// Synonym matched by the typed prefix; inserted on accept.
    pub synonym: String,
    pub name: String,
    pub concept_type: ConceptType,
}

/// The four per-type rankings of one patient, with each entry's position
/// inside its own type's list.
#[derive(Debug, Clone)]
pub struct CachedRankings {
    lists: [RankedList; 4],
    position: Vec<u32>,
}

impl CachedRankings {
    /// `lists` in any order; each must hold entries of a distinct type.
    pub fn new(ontology: &Ontology, lists: [RankedList; 4]) -> Self {
        let mut by_type: [Option<RankedList>; 4] = Default::default();
        for l in lists {
            let i = l.concept_type.index();
            assert!(by_type[i].is_none(), "two rankings for {}", l.concept_type);
            by_type[i] = Some(l);
        }
        let lists = by_type.map(|l| l.expect("one ranking per concept type"));
        let mut position = vec![u32::MAX; ontology.len()];
        for l in &lists {
            for (i, item) in l.items.iter().enumerate() {
                position[item.entry.get()] = i as u32;
            }
        }
        Self { lists, position }
    }

    pub fn list(&self, t: ConceptType) -> &RankedList {
        &self.lists[t.index()]
    }

    pub fn lists(&self) -> &[RankedList; 4] {
        &self.lists
    }

    /// Position within the entry's type ranking; unranked entries sort last.
    pub fn position(&self, entry: EntryIdx) -> u32 {
        self.position[entry.get()]
    }
}

/// Stacks the per-type rankings in scope order, keeping entries with a
/// synonym that starts with `prefix`, and truncates to `k`.
///
/// An empty prefix matches every entry through its canonical name.
pub fn suggest(
    ontology: &Ontology,
    rankings: &CachedRankings,
    scope: &ScopeState,
    prefix: &str,
    k: usize,
) -> Vec<Suggestion> {
    let mut out = Vec::with_capacity(k);
    if !scope.active {
        return out;
    }
    for t in scope.type_order {
        if out.len() >= k {
            break;
        }
        let want = k - out.len();
        if prefix.is_empty() {
            for item in rankings.list(t).items.iter().take(want) {
                let e = ontology.entry(item.entry);
                out.push(Suggestion {
                    entry: item.entry,
                    synonym: normalize_synonym(&e.name),
                    name: e.name.clone(),
                    concept_type: t,
                });
            }
            continue;
        }
        let mut hits: Vec<(u32, EntryIdx, &str)> = ontology
            .prefix_matches(t, prefix)
            .into_iter()
            .map(|(e, syn)| (rankings.position(e), e, syn))
            .collect();
        let take = want.min(hits.len());
        if take == 0 {
            continue;
        }
        hits.select_nth_unstable_by_key(take - 1, |&(p, e, _)| (p, e));
        hits.truncate(take);
        hits.sort_unstable_by_key(|&(p, e, _)| (p, e));
        out.extend(hits.into_iter().map(|(_, e, syn)| Suggestion {
            entry: e,
            synonym: syn.to_string(),
            name: ontology.entry(e).name.clone(),
            concept_type: t,
        }));
    }
    out
}
