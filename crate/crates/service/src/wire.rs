//! Request and response bodies.

use serde::{Deserialize, Serialize};

use scribe_core::extraction::Mention;
use scribe_core::ontology::{ConceptType, Ontology};
use scribe_core::session::{NoteState, Suggestion, Tag};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreatedSession {
    pub session_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestRequest {
    pub text: String,
    /// Byte offset into `text`.
    pub cursor: usize,
    /// Section header name; detected from the text when absent.
    #[serde(default)]
    pub section: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireSuggestion {
    pub entry: String,
    pub synonym: String,
    pub name: String,
    #[serde(rename = "type")]
    pub concept_type: ConceptType,
}

impl WireSuggestion {
    pub fn new(s: &Suggestion, ontology: &Ontology) -> Self {
        Self {
            entry: ontology.entry(s.entry).id.clone(),
            synonym: s.synonym.clone(),
            name: s.name.clone(),
            concept_type: s.concept_type,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestResponse {
    pub active: bool,
    pub type_order: [ConceptType; 4],
    pub suggestions: Vec<WireSuggestion>,
    /// Server-side time spent in scope detection and suggestion assembly.
    pub processing_us: u64,
}

/// Accepts the `index`-th suggestion of the last suggest response. When
/// `entry` is given it must match that suggestion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptRequest {
    pub index: usize,
    #[serde(default)]
    pub entry: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetroRequest {
    pub start: usize,
    pub end: usize,
    pub entry: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireTag {
    pub start: usize,
    pub end: usize,
    pub entry: String,
    pub name: String,
    #[serde(rename = "type")]
    pub concept_type: ConceptType,
    pub synonym: String,
}

impl WireTag {
    pub fn new(t: &Tag, ontology: &Ontology) -> Self {
        let e = ontology.entry(t.entry);
        Self {
            start: t.start,
            end: t.end,
            entry: e.id.clone(),
            name: e.name.clone(),
            concept_type: e.concept_type,
            synonym: t.synonym.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireCandidate {
    pub start: usize,
    pub end: usize,
    pub entry: String,
    pub synonym: String,
}

impl WireCandidate {
    pub fn new(m: &Mention, ontology: &Ontology) -> Self {
        Self { start: m.start, end: m.end, entry: ontology.entry(m.entry).id.clone(), synonym: m.synonym.clone() }
    }
}

/// The note as the client should render it after a tagging action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoteView {
    pub text: String,
    pub tags: Vec<WireTag>,
    /// Untagged synonym occurrences the user may confirm.
    pub retro_candidates: Vec<WireCandidate>,
}

impl NoteView {
    pub fn new(note: &NoteState, candidates: &[Mention], ontology: &Ontology) -> Self {
        Self {
            text: note.text().to_string(),
            tags: note.tags().iter().map(|t| WireTag::new(t, ontology)).collect(),
            retro_candidates: candidates.iter().map(|m| WireCandidate::new(m, ontology)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub engine: String,
    pub entries: usize,
    pub synonyms: usize,
    pub sessions: usize,
    /// Ranker calls per concept type since start, in type-index order.
    pub ranker_invocations: [u64; 4],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}
