//! Concept extraction from free text.
//!
//! [`ConceptExtractor`] walks a token-level trie of every synonym and keeps the
//! leftmost-longest, non-overlapping matches, then assigns polarity with
//! [`detect_negation`]. [`RetroMatcher`] is the multi-pattern scanner used for
//! retroactive tagging: it reports every word-aligned synonym occurrence,
//! overlapping ones included.

mod negation;
mod retro;
mod trie;

use serde::{Deserialize, Serialize};

pub use negation::{detect_negation, LexiconError, NegationLexicon, NegationLexiconFile, Polarity};
pub use retro::RetroMatcher;

use crate::ontology::{EntryIdx, Ontology};
use crate::text::{tokenize, Token};
use trie::TokenTrie;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    /// Byte offsets into the source text, half-open.
    pub start: usize,
    pub end: usize,
    pub synonym: String,
    pub entry: EntryIdx,
    pub polarity: Polarity,
}

/// JSON form of a mention, as emitted by `scribe extract`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionRecord {
    pub start: usize,
    pub end: usize,
    pub synonym: String,
    pub entry: String,
    pub polarity: Polarity,
}

impl Mention {
    pub fn to_record(&self, ontology: &Ontology) -> MentionRecord {
        MentionRecord {
            start: self.start,
            end: self.end,
            synonym: self.synonym.clone(),
            entry: ontology.entry(self.entry).id.clone(),
            polarity: self.polarity,
        }
    }

    pub fn overlaps(&self, start: usize, end: usize) -> bool {
        self.start < end && start < self.end
    }
}

/// The entry a bare synonym resolves to when several concept types share it:
/// highest empirical frequency, then lowest entry id.
pub(crate) fn preferred_entry(ontology: &Ontology, candidates: &[EntryIdx]) -> EntryIdx {
    *candidates
        .iter()
        .min_by(|a, b| ontology.entry(**b).frequency.cmp(&ontology.entry(**a).frequency).then(a.cmp(b)))
        .expect("synonym has at least one entry")
}

/// Trie-backed extractor over one ontology; build once and reuse.
pub struct ConceptExtractor {
    trie: TokenTrie,
}

impl ConceptExtractor {
    pub fn new(ontology: &Ontology) -> Self {
        Self { trie: TokenTrie::build(ontology) }
    }

    pub fn extract(&self, text: &str, lexicon: &NegationLexicon) -> Vec<Mention> {
        let tokens = tokenize(text);
        let lowered: Vec<String> = tokens.iter().map(|t| t.text(text).to_lowercase()).collect();
        let spans = self.match_spans(&tokens, &lowered);

        let token_refs: Vec<&str> = lowered.iter().map(String::as_str).collect();
        let positions: Vec<(usize, usize)> = spans.iter().map(|s| (s.first, s.last)).collect();
        let polarity = detect_negation(&token_refs, &positions, lexicon);

        spans
            .into_iter()
            .zip(polarity)
            .map(|(s, polarity)| {
                let (synonym, entry) = self.trie.terminal(s.terminal);
                Mention {
                    start: tokens[s.first].start,
                    end: tokens[s.last].end,
                    synonym: synonym.to_string(),
                    entry,
                    polarity,
                }
            })
            .collect()
    }

    fn match_spans(&self, tokens: &[Token], lowered: &[String]) -> Vec<Span> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            if !tokens[i].is_word() {
                i += 1;
                continue;
            }
            let mut node = TokenTrie::ROOT;
            let mut best: Option<(usize, u32)> = None;
            let mut j = i;
            while j < tokens.len() && tokens[j].is_word() {
                match self.trie.child(node, &lowered[j]) {
                    Some(next) => node = next,
                    None => break,
                }
                if let Some(t) = self.trie.terminal_at(node) {
                    best = Some((j, t));
                }
                j += 1;
            }
            match best {
                Some((last, terminal)) => {
                    out.push(Span { first: i, last, terminal });
                    i = last + 1;
                }
                None => i += 1,
            }
        }
        out
    }
}

struct Span {
    first: usize,
    last: usize,
    terminal: u32,
}

/// One-shot extraction; builds the trie on every call.
pub fn extract_concepts(text: &str, ontology: &Ontology, lexicon: &NegationLexicon) -> Vec<Mention> {
    ConceptExtractor::new(ontology).extract(text, lexicon)
}

/// One-shot retroactive scan; builds the automaton on every call.
pub fn retroactive_candidates(text: &str, ontology: &Ontology) -> Vec<Mention> {
    RetroMatcher::new(ontology).candidates(text)
}
