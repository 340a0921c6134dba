use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::{ConceptType, Ontology};
use crate::session::section::{section_at, NoteSection};
use crate::session::Tag;
use crate::text::{is_token_char, normalize_phrase, tokenize, TokenKind};

#[derive(Debug, Error)]
pub enum TriggerError {
    #[error("reading trigger lexicon: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing trigger lexicon: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("trigger phrase {0:?} has no tokens")]
    EmptyPhrase(String),
    #[error("manual trigger must be one non-whitespace character, got {0:?}")]
    BadManual(String),
}

/// On-disk form of the trigger lexicon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerLexiconFile {
    pub triggers: BTreeMap<String, ConceptType>,
    pub continuations: Vec<String>,
    pub manual: String,
}

/// Trigger phrases, continuation tokens and the manual trigger character.
#[derive(Debug, Clone)]
pub struct TriggerLexicon {
    /// First token → `(phrase tokens, type)`, longest phrase first.
    by_first: HashMap<String, Vec<(Vec<String>, ConceptType)>>,
    continuations: Vec<String>,
    manual: char,
    file: TriggerLexiconFile,
}

impl TriggerLexicon {
    pub fn from_file(file: TriggerLexiconFile) -> Result<Self, TriggerError> {
        let mut chars = file.manual.chars();
        let manual = match (chars.next(), chars.next()) {
            (Some(c), None) if !c.is_whitespace() => c,
            _ => return Err(TriggerError::BadManual(file.manual.clone())),
        };
        let mut by_first: HashMap<String, Vec<(Vec<String>, ConceptType)>> = HashMap::new();
        for (phrase, &t) in &file.triggers {
            let norm = normalize_phrase(phrase);
            let toks: Vec<String> = tokenize(&norm).iter().map(|k| k.text(&norm).to_string()).collect();
            let Some(first) = toks.first().cloned() else {
                return Err(TriggerError::EmptyPhrase(phrase.clone()));
            };
            by_first.entry(first).or_default().push((toks, t));
        }
        for v in by_first.values_mut() {
            v.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        }
        let continuations = file.continuations.iter().map(|c| normalize_phrase(c)).collect();
        Ok(Self { by_first, continuations, manual, file })
    }

    pub fn from_json(raw: &str) -> Result<Self, TriggerError> {
        Self::from_file(serde_json::from_str(raw)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TriggerError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_file(&self) -> &TriggerLexiconFile {
        &self.file
    }

    pub fn manual(&self) -> char {
        self.manual
    }

    pub fn is_continuation(&self, lowered: &str) -> bool {
        self.continuations.iter().any(|c| c == lowered)
    }

    /// Longest trigger starting at `toks[0]`: `(token count, type)`.
    fn match_at(&self, toks: &[&str]) -> Option<(usize, ConceptType)> {
        self.by_first.get(*toks.first()?)?.iter().find_map(|(phrase, t)| {
            (phrase.len() <= toks.len() && phrase.iter().zip(toks).all(|(p, t)| p == t)).then_some((phrase.len(), *t))
        })
    }
}

impl Default for TriggerLexicon {
    fn default() -> Self {
        Self::from_json(include_str!("../../data/triggers.json")).expect("bundled trigger lexicon is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ScopeOrigin {
    TriggerPhrase,
    Continuation,
    TaggedConcept,
    Manual,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeState {
    pub active: bool,
    /// Head is the predicted type.
    pub type_order: [ConceptType; 4],
    pub origin: ScopeOrigin,
}

impl ScopeState {
    pub fn inactive(section: NoteSection) -> Self {
        Self { active: false, type_order: section.default_type_order(), origin: ScopeOrigin::None }
    }

    fn headed(section: NoteSection, head: ConceptType, origin: ScopeOrigin) -> Self {
        let mut order = [head; 4];
        let rest = section.default_type_order().into_iter().filter(|&t| t != head);
        order[1..].iter_mut().zip(rest).for_each(|(o, t)| *o = t);
        Self { active: true, type_order: order, origin }
    }

    pub fn head(&self) -> ConceptType {
        self.type_order[0]
    }
}

/// Scope together with the text the user is in the middle of typing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeQuery {
    pub state: ScopeState,
    pub section: NoteSection,
    /// Byte offset where the in-progress concept text starts.
    pub prefix_start: usize,
    /// An accepted suggestion replaces `replace_start..cursor`; this extends
    /// `prefix_start` back over a directly preceding manual trigger.
    pub replace_start: usize,
    /// Lowercased in-progress text with whitespace collapsed.
    pub prefix: String,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Word,
    Punct,
    Manual,
}

/// Lowercase and collapse whitespace. A trailing blank is kept so that
/// `"chest "` still matches `"chest pain"` but not `"chester"`.
pub fn normalize_prefix(raw: &str) -> String {
    let mut out = raw.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    if !out.is_empty() && raw.ends_with(char::is_whitespace) {
        out.push(' ');
    }
    out
}

/// Greedy left-to-right scope detection over the current section up to
/// `cursor`.
///
/// Rules per token: a token inside a tag activates the tag's type; a trigger
/// phrase activates its mapped type; a continuation keeps the state; the
/// manual character activates the section default order; any other token
/// turns scope off. The word ending at the cursor is the typed prefix. While
/// scope is on, a word that starts text matching some synonym prefix up to
/// the cursor is taken as a multi-word concept being typed.
///
/// Panics if `cursor` is past the end of `text` or not on a char boundary.
pub fn update_scope(
    text: &str,
    cursor: usize,
    section: Option<NoteSection>,
    tags: &[Tag],
    lexicon: &TriggerLexicon,
    ontology: &Ontology,
) -> ScopeQuery {
    let (detected, body_start) = section_at(text, cursor);
    let section = section.unwrap_or(detected);
    let slice = &text[body_start..cursor];

    let mut toks: Vec<(usize, usize, Kind)> = Vec::new();
    for t in tokenize(slice) {
        let (s, e) = (body_start + t.start, body_start + t.end);
        let raw = &text[s..e];
        if raw.starts_with(lexicon.manual) {
            let m = lexicon.manual.len_utf8();
            toks.push((s, s + m, Kind::Manual));
            if e > s + m {
                toks.push((s + m, e, Kind::Word));
            }
        } else {
            toks.push((s, e, if t.kind == TokenKind::Word { Kind::Word } else { Kind::Punct }));
        }
    }
    let lowered: Vec<String> = toks.iter().map(|&(s, e, _)| text[s..e].to_lowercase()).collect();
    let partial_at_end = cursor > body_start && text[..cursor].chars().next_back().is_some_and(is_token_char);

    let tag_type = |tag: &Tag| ontology.entry(tag.entry).concept_type;
    let mut tag_ix = tags.partition_point(|t| t.end <= body_start);
    let mut state = ScopeState::inactive(section);
    let mut prefix_start = cursor;
    let mut manual_span: Option<(usize, usize)> = None;
    let mut i = 0;
    while i < toks.len() {
        let (s, e, kind) = toks[i];
        while tag_ix < tags.len() && tags[tag_ix].end <= s {
            tag_ix += 1;
        }
        if let Some(tag) = tags.get(tag_ix).filter(|t| t.start <= s) {
            state = ScopeState::headed(section, tag_type(tag), ScopeOrigin::TaggedConcept);
            while i < toks.len() && toks[i].0 < tag.end {
                i += 1;
            }
            continue;
        }
        let is_last = i + 1 == toks.len();
        if kind == Kind::Manual {
            state = ScopeState { active: true, type_order: section.default_type_order(), origin: ScopeOrigin::Manual };
            manual_span = Some((s, e));
            i += 1;
            continue;
        }
        if kind == Kind::Word && is_last && e == cursor && partial_at_end {
            prefix_start = s;
            break;
        }
        // Trigger tokens must be complete: stop before a partial last word.
        let complete = if partial_at_end { toks.len() - 1 } else { toks.len() };
        let window: Vec<&str> = lowered[i..complete.max(i)].iter().map(String::as_str).collect();
        if let Some((n, t)) = lexicon.match_at(&window) {
            state = ScopeState::headed(section, t, ScopeOrigin::TriggerPhrase);
            i += n;
            continue;
        }
        if lexicon.is_continuation(&lowered[i]) {
            if state.active {
                state.origin = ScopeOrigin::Continuation;
            }
            i += 1;
            continue;
        }
        if kind == Kind::Word && state.active {
            let untagged = tags.get(tag_ix).is_none_or(|t| t.start >= cursor);
            if untagged && ontology.has_prefix(&normalize_prefix(&text[s..cursor])) {
                prefix_start = s;
                break;
            }
        }
        state = ScopeState::inactive(section);
        i += 1;
    }
    let replace_start = match manual_span {
        Some((ms, me)) if me == prefix_start => ms,
        _ => prefix_start,
    };
    ScopeQuery { state, section, prefix_start, replace_start, prefix: normalize_prefix(&text[prefix_start..cursor]) }
}
