use std::cmp::Reverse;

use crate::features::PatientContext;
use crate::ontology::{ConceptType, Ontology};
use crate::ranking::RankedList;

/// Entries by corpus frequency descending, id ascending.
pub fn rank_by_corpus_frequency(t: ConceptType, ontology: &Ontology) -> RankedList {
    let mut v = ontology.entries_of(t).to_vec();
    v.sort_by_key(|&e| (Reverse(ontology.entry(e).frequency), e));
    RankedList::from_order(t, v)
}

/// Entries alphabetically by canonical name.
pub fn rank_spell(t: ConceptType, ontology: &Ontology) -> RankedList {
    let mut v = ontology.entries_of(t).to_vec();
    v.sort_by(|&a, &b| ontology.entry(a).name.cmp(&ontology.entry(b).name).then(a.cmp(&b)));
    RankedList::from_order(t, v)
}

/// Lab or medication ranking: entries in the patient's structured history by
/// recorded count, then everything else by corpus frequency. Other types get
/// the corpus-frequency order.
pub fn rank_frequency(t: ConceptType, context: &PatientContext, ontology: &Ontology) -> RankedList {
    let history = match t {
        ConceptType::Lab => PatientContext::history_counts(&context.labs, ontology),
        ConceptType::Medication => PatientContext::history_counts(&context.meds, ontology),
        _ => Default::default(),
    };
    let mut v = ontology.entries_of(t).to_vec();
    v.sort_by_key(|&e| {
        let count = history.get(&e).copied().unwrap_or(0);
        (count == 0, Reverse(count), Reverse(ontology.entry(e).frequency), e)
    });
    RankedList::from_order(t, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::HistoryCount;

    #[test]
    fn empty_history_is_corpus_order() {
        let o = Ontology::demo();
        let ctx = PatientContext::default();
        assert_eq!(rank_frequency(ConceptType::Lab, &ctx, &o), rank_by_corpus_frequency(ConceptType::Lab, &o));
    }

    #[test]
    fn history_counts_first() {
        let o = Ontology::demo();
        let ctx = PatientContext {
            labs: vec![
                HistoryCount { entry: "l_glucose".into(), count: 1 },
                HistoryCount { entry: "l_hct".into(), count: 3 },
            ],
            ..PatientContext::default()
        };
        let l = rank_frequency(ConceptType::Lab, &ctx, &o);
        let ids: Vec<_> = l.entries().take(2).map(|e| o.entry(e).id.as_str()).collect();
        assert_eq!(ids, vec!["l_hct", "l_glucose"]);
        assert_eq!(l, rank_frequency(ConceptType::Lab, &ctx, &o));
        assert_eq!(l.len(), o.entries_of(ConceptType::Lab).len());
    }

    #[test]
    fn spell_is_alphabetical() {
        let o = Ontology::demo();
        let l = rank_spell(ConceptType::Medication, &o);
        let names: Vec<_> = l.entries().map(|e| o.entry(e).name.clone()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
    }
}
