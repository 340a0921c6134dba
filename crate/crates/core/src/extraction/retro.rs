use std::collections::HashMap;

use aho_corasick::{AhoCorasick, MatchKind};

use crate::extraction::{Mention, Polarity};
use crate::ontology::{EntryIdx, Ontology};
use crate::text::{on_word_boundary, LoweredText};

/// Aho-Corasick automaton over every synonym in the ontology.
pub struct RetroMatcher {
    automaton: AhoCorasick,
    patterns: Vec<(String, Vec<EntryIdx>)>,
}

impl RetroMatcher {
    pub fn new(ontology: &Ontology) -> Self {
        let mut owners: HashMap<&str, Vec<EntryIdx>> = HashMap::new();
        for (syn, entry) in ontology.all_synonyms() {
            owners.entry(syn).or_default().push(entry);
        }
        let mut patterns: Vec<(String, Vec<EntryIdx>)> = owners
            .into_iter()
            .map(|(s, mut es)| {
                es.sort();
                (s.to_string(), es)
            })
            .collect();
        patterns.sort();
        let automaton = AhoCorasick::builder()
            .match_kind(MatchKind::Standard)
            .build(patterns.iter().map(|(s, _)| s.as_str()))
            .expect("synonym automaton builds");
        Self { automaton, patterns }
    }

    /// Every word-boundary-aligned synonym occurrence, one candidate per
    /// owning entry, sorted by (start, end, entry).
    pub fn candidates(&self, text: &str) -> Vec<Mention> {
        let lowered = LoweredText::new(text);
        let mut out = Vec::new();
        for m in self.automaton.find_overlapping_iter(&lowered.lower) {
            let start = lowered.source_start(m.start());
            let end = lowered.source_end(m.end(), text);
            if !on_word_boundary(text, start, end) {
                continue;
            }
            let (syn, entries) = &self.patterns[m.pattern().as_usize()];
            for &entry in entries {
                out.push(Mention { start, end, synonym: syn.clone(), entry, polarity: Polarity::Positive });
            }
        }
        out.sort_by(|a, b| (a.start, a.end, a.entry).cmp(&(b.start, b.end, b.entry)));
        out
    }
}
