//! Per-note autocompletion state.
//!
//! A [`Session`] owns one note, the patient's cached rankings and the event
//! log. Every query recomputes scope from the text before the cursor with
//! [`update_scope`] and stacks the cached rankings with [`suggest`]; no model
//! runs on this path.

mod log;
mod note;
mod scope;
mod section;
mod suggest;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extraction::{detect_negation, Mention, NegationLexicon, Polarity, RetroMatcher};
use crate::ontology::{ConceptType, EntryIdx, Ontology};
use crate::text::tokenize;

pub use log::{LogRecord, SessionEvent, SessionLog};
pub use note::{NoteState, Tag, TextEdit};
pub use scope::{
    normalize_prefix, update_scope, ScopeOrigin, ScopeQuery, ScopeState, TriggerError, TriggerLexicon,
    TriggerLexiconFile,
};
pub use section::{section_at, split_sections, NoteSection, SectionSpan};
pub use suggest::{suggest, CachedRankings, Suggestion, DEFAULT_K};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SessionError {
    #[error("cursor {cursor} is not a character boundary of a {len}-byte note")]
    BadCursor { cursor: usize, len: usize },
    #[error("no suggestion list has been shown for the current note")]
    NothingShown,
    #[error("the note changed since the suggestions were shown")]
    Stale,
    #[error("suggestion {0} is not in the shown list")]
    NoSuchSuggestion(usize),
    #[error("span {start}..{end} is not a retroactive candidate for that entry")]
    NotACandidate { start: usize, end: usize },
    #[error("span {start}..{end} overlaps an existing tag")]
    Overlap { start: usize, end: usize },
}

#[derive(Debug, Clone)]
struct Shown {
    version: u64,
    cursor: usize,
    query: ScopeQuery,
    suggestions: Vec<Suggestion>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryResult {
    pub scope: ScopeQuery,
    pub suggestions: Vec<Suggestion>,
}

/// Stand-off annotation of one tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub start: usize,
    pub end: usize,
    pub entry: String,
    pub name: String,
    #[serde(rename = "type")]
    pub concept_type: ConceptType,
    pub cuis: Vec<String>,
    pub synonym: String,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportedNote {
    pub text: String,
    pub annotations: Vec<Annotation>,
    pub log: Vec<LogRecord>,
}

pub struct Session {
    ontology: Arc<Ontology>,
    triggers: Arc<TriggerLexicon>,
    rankings: CachedRankings,
    note: NoteState,
    log: SessionLog,
    shown: Option<Shown>,
    k: usize,
}

impl Session {
    pub fn new(ontology: Arc<Ontology>, triggers: Arc<TriggerLexicon>, rankings: CachedRankings, k: usize) -> Self {
        Self { ontology, triggers, rankings, note: NoteState::default(), log: SessionLog::default(), shown: None, k }
    }

    pub fn note(&self) -> &NoteState {
        &self.note
    }

    pub fn log(&self) -> &SessionLog {
        &self.log
    }

    pub fn rankings(&self) -> &CachedRankings {
        &self.rankings
    }

    /// Syncs the note to `text`, then computes scope and suggestions at
    /// `cursor`. `section` overrides header detection.
    pub fn query(
        &mut self,
        text: &str,
        cursor: usize,
        section: Option<NoteSection>,
    ) -> Result<QueryResult, SessionError> {
        if cursor > text.len() || !text.is_char_boundary(cursor) {
            return Err(SessionError::BadCursor { cursor, len: text.len() });
        }
        if let Some(edit) = self.note.set_text(text) {
            for ch in edit.inserted.chars() {
                self.log.push(SessionEvent::Key { ch });
                if ch == self.triggers.manual() {
                    self.log.push(SessionEvent::ManualTrigger);
                }
            }
        }
        let query = update_scope(self.note.text(), cursor, section, self.note.tags(), &self.triggers, &self.ontology);
        let suggestions = suggest(&self.ontology, &self.rankings, &query.state, &query.prefix, self.k);
        self.log.push(SessionEvent::Suggest {
            prefix: query.prefix.clone(),
            shown: suggestions.iter().map(|s| self.ontology.entry(s.entry).id.clone()).collect(),
        });
        self.shown =
            Some(Shown { version: self.note.version(), cursor, query: query.clone(), suggestions: suggestions.clone() });
        Ok(QueryResult { scope: query, suggestions })
    }

    /// Inserts the `index`-th shown suggestion in place of the typed prefix.
    /// `expect` guards against a client acting on a different list.
    pub fn accept(&mut self, index: usize, expect: Option<EntryIdx>) -> Result<Tag, SessionError> {
        let shown = self.shown.as_ref().ok_or(SessionError::NothingShown)?;
        if shown.version != self.note.version() {
            return Err(SessionError::Stale);
        }
        let s = shown.suggestions.get(index).ok_or(SessionError::NoSuchSuggestion(index))?;
        if expect.is_some_and(|e| e != s.entry) {
            return Err(SessionError::Stale);
        }
        let (start, end) = (shown.query.replace_start, shown.cursor);
        let (entry, synonym) = (s.entry, s.synonym.clone());
        let typed = shown.query.prefix.chars().count();
        let tag = self.note.insert_tag(start, end, entry, &synonym).clone();
        self.log.push(SessionEvent::Accept {
            entry: self.ontology.entry(entry).id.clone(),
            rank: index,
            typed_prefix_len: typed,
        });
        self.shown = None;
        Ok(tag)
    }

    /// Untagged synonym occurrences that do not overlap an existing tag.
    pub fn retro_candidates(&self, matcher: &RetroMatcher) -> Vec<Mention> {
        matcher.candidates(self.note.text()).into_iter().filter(|m| self.note.overlapping(m.start, m.end).is_none()).collect()
    }

    pub fn retro_confirm(
        &mut self,
        matcher: &RetroMatcher,
        start: usize,
        end: usize,
        entry: EntryIdx,
    ) -> Result<Tag, SessionError> {
        if self.note.overlapping(start, end).is_some() {
            return Err(SessionError::Overlap { start, end });
        }
        let m = matcher
            .candidates(self.note.text())
            .into_iter()
            .find(|m| m.start == start && m.end == end && m.entry == entry)
            .ok_or(SessionError::NotACandidate { start, end })?;
        let tag = Tag { entry, start, end, synonym: self.note.text()[start..end].to_string() };
        debug_assert_eq!(tag.synonym.to_lowercase(), m.synonym);
        let tag = self.note.add_tag(tag).clone();
        self.log.push(SessionEvent::RetroAccept { entry: self.ontology.entry(entry).id.clone() });
        Ok(tag)
    }

    /// Note text with one annotation per tag; polarity comes from the negation
    /// rules applied to the final text.
    pub fn export(&self, negation: &NegationLexicon) -> ExportedNote {
        let text = self.note.text();
        let tokens = tokenize(text);
        let lowered: Vec<String> = tokens.iter().map(|t| t.text(text).to_lowercase()).collect();
        let refs: Vec<&str> = lowered.iter().map(String::as_str).collect();
        let spans: Vec<(usize, usize)> = self
            .note
            .tags()
            .iter()
            .map(|t| {
                let first = tokens.partition_point(|k| k.end <= t.start);
                let last = tokens.partition_point(|k| k.start < t.end).saturating_sub(1).max(first);
                (first, last)
            })
            .collect();
        let polarity = detect_negation(&refs, &spans, negation);
        let annotations = self
            .note
            .tags()
            .iter()
            .zip(polarity)
            .map(|(t, polarity)| {
                let e = self.ontology.entry(t.entry);
                Annotation {
                    start: t.start,
                    end: t.end,
                    entry: e.id.clone(),
                    name: e.name.clone(),
                    concept_type: e.concept_type,
                    cuis: e.cuis.iter().cloned().collect(),
                    synonym: t.synonym.clone(),
                    polarity,
                }
            })
            .collect();
        ExportedNote { text: text.to_string(), annotations, log: self.log.records().to_vec() }
    }
}
