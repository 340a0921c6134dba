use std::cmp::Reverse;
use std::collections::HashSet;

use crate::ontology::{ConceptType, EntryIdx, Ontology};
use crate::ranking::RankedList;

/// Sort key of a condition entry; smaller sorts first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct TermKey {
    pub not_in_ehr: bool,
    pub bucket_rank: usize,
    pub frequency: Reverse<u64>,
    pub entry: EntryIdx,
}

/// Bucket indices by score descending, index ascending on ties.
pub fn bucket_order(scores: &[(usize, f64)]) -> Vec<usize> {
    let mut v = scores.to_vec();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v.into_iter().map(|(b, _)| b).collect()
}

/// Expands a bucket ranking to every CONDITION entry, keyed by (in EHR first,
/// bucket rank, frequency descending, id). Pass an empty `ehr` set to drop
/// the first key. Buckets missing from the ranking rank last.
pub fn rank_condition_terms(bucket_ranking: &[usize], ehr: &HashSet<EntryIdx>, ontology: &Ontology) -> RankedList {
    let mut rank = vec![bucket_ranking.len(); ontology.bucket_count()];
    for (r, &b) in bucket_ranking.iter().enumerate() {
        rank[b] = rank[b].min(r);
    }
    let mut keyed: Vec<TermKey> = ontology
        .entries_of(ConceptType::Condition)
        .iter()
        .map(|&e| TermKey {
            not_in_ehr: !ehr.contains(&e),
            bucket_rank: rank[ontology.bucket_index(e)],
            frequency: Reverse(ontology.entry(e).frequency),
            entry: e,
        })
        .collect();
    keyed.sort();
    RankedList::from_order(ConceptType::Condition, keyed.into_iter().map(|k| k.entry))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ehr_entry_first_within_bucket() {
        let o = Ontology::demo();
        let hld = o.bucket_of("c_hyperlipidemia").unwrap();
        let ldl = o.find("c_increased_ldl").unwrap();
        let mut order = vec![hld];
        order.extend(o.buckets_of_type(ConceptType::Condition).iter().filter(|&&b| b != hld));
        let plain = rank_condition_terms(&order, &HashSet::new(), &o);
        let ids: Vec<_> = plain.entries().take(2).map(|e| o.entry(e).id.as_str()).collect();
        assert_eq!(ids, vec!["c_hyperlipidemia", "c_increased_ldl"]);
        let with = rank_condition_terms(&order, &HashSet::from([ldl]), &o);
        assert_eq!(with.entries().next(), Some(ldl));
        assert_eq!(with.len(), o.entries_of(ConceptType::Condition).len());
    }

    #[test]
    fn ehr_trumps_bucket_rank() {
        let o = Ontology::demo();
        let order = bucket_order(
            &o.buckets_of_type(ConceptType::Condition).iter().map(|&b| (b, -(b as f64))).collect::<Vec<_>>(),
        );
        let last = *order.last().unwrap();
        let e = o.bucket(last).members[0];
        let l = rank_condition_terms(&order, &HashSet::from([e]), &o);
        assert_eq!(l.entries().next(), Some(e));
    }

    #[test]
    fn bucket_order_ties() {
        assert_eq!(bucket_order(&[(3, 0.5), (1, 0.5), (2, 0.7)]), vec![2, 1, 3]);
    }
}
