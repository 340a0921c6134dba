use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::EvalRecord;
use crate::evaluation::EvalError;
use crate::ontology::{ConceptType, EntryIdx, Ontology};
use crate::session::{suggest, update_scope, CachedRankings, NoteSection, SessionEvent, SessionLog, Tag, TriggerLexicon};
use crate::text::normalize_synonym;

/// When the simulated clinician accepts a suggestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Policy {
    /// Never accept: every term is typed out.
    NoAutocomplete,
    /// Accept as soon as the target is among the first `k` suggestions.
    TopK(usize),
}

impl Policy {
    fn k(self) -> usize {
        match self {
            Policy::NoAutocomplete => 0,
            Policy::TopK(k) => k,
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::NoAutocomplete => f.write_str("none"),
            Policy::TopK(k) => write!(f, "top{k}"),
        }
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        if s == "none" {
            return Ok(Policy::NoAutocomplete);
        }
        s.strip_prefix("top")
            .and_then(|k| k.parse().ok())
            .filter(|&k| k > 0)
            .map(Policy::TopK)
            .ok_or_else(|| format!("unknown policy {s:?}; expected none or topK"))
    }
}

/// Relation of a condition term to the patient's prior record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EhrClass {
    NoHistory,
    NotInEhr,
    InEhr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermReplay {
    pub entry: EntryIdx,
    pub concept_type: ConceptType,
    pub section: NoteSection,
    /// Characters in the documented text.
    pub length: usize,
    /// Keystrokes spent, acceptance and manual trigger included.
    pub burden: usize,
    pub autocompleted: bool,
    /// The manual trigger was typed (and then the term accepted).
    pub manual: bool,
    /// Scope was on when the clinician reached the term.
    pub auto_triggered: bool,
    /// Auto-triggered with the term's type at the head of the order.
    pub type_correct: bool,
    pub ehr: EhrClass,
}

/// Replays the documented terms of one note.
///
/// Each term is typed one character at a time after the preceding note text,
/// querying suggestions after every keystroke. Earlier terms are tagged at
/// their documented spans whether they were accepted or confirmed
/// retroactively. When scope is off at the term, the clinician types the
/// manual trigger first, which is charged only if it leads to an accept.
/// A term's burden never exceeds its length.
pub fn replay_note(
    record: &EvalRecord,
    ontology: &Ontology,
    rankings: &CachedRankings,
    triggers: &TriggerLexicon,
    policy: Policy,
    mut log: Option<&mut SessionLog>,
) -> Result<Vec<TermReplay>, EvalError> {
    let text = record.text.as_str();
    let k = policy.k();
    let ehr = record.context.ehr_ages(ontology);
    let has_history = record.context.has_history();
    let mut tags: Vec<Tag> = Vec::with_capacity(record.mentions.len());
    let mut out = Vec::with_capacity(record.mentions.len());
    let mut manual_text = String::new();
    for m in &record.mentions {
        let aligned = m.end <= text.len()
            && m.start < m.end
            && text.is_char_boundary(m.start)
            && text.is_char_boundary(m.end)
            && normalize_synonym(&text[m.start..m.end]) == m.synonym
            && tags.last().is_none_or(|t| t.end <= m.start);
        if !aligned {
            return Err(EvalError::Misaligned { start: m.start, end: m.end });
        }
        let source = &text[m.start..m.end];
        let length = source.chars().count();
        let concept_type = ontology.entry(m.entry).concept_type;
        let start = update_scope(text, m.start, None, &tags, triggers, ontology);
        let auto = start.state.active;
        let mut term = TermReplay {
            entry: m.entry,
            concept_type,
            section: m.section,
            length,
            burden: length,
            autocompleted: false,
            manual: false,
            auto_triggered: auto,
            type_correct: auto && start.state.head() == concept_type,
            ehr: if !has_history {
                EhrClass::NoHistory
            } else if ehr.contains_key(&m.entry) {
                EhrClass::InEhr
            } else {
                EhrClass::NotInEhr
            },
        };
        if k > 0 {
            let overhead = usize::from(!auto);
            if !auto {
                manual_text.clear();
                manual_text.push_str(&text[..m.start]);
                manual_text.push(triggers.manual());
                manual_text.push_str(source);
            }
            let (query_text, base) =
                if auto { (text, m.start) } else { (manual_text.as_str(), m.start + triggers.manual().len_utf8()) };
            let offsets: Vec<usize> = source.char_indices().map(|(i, _)| i).collect();
            for (j, &off) in offsets.iter().enumerate() {
                if overhead + j + 1 > length {
                    break;
                }
                let q = update_scope(query_text, base + off, None, &tags, triggers, ontology);
                let shown = suggest(ontology, rankings, &q.state, &q.prefix, k);
                if let Some(log) = log.as_deref_mut() {
                    if j == 0 && !auto {
                        log.push(SessionEvent::ManualTrigger);
                    }
                    log.push(SessionEvent::Suggest {
                        prefix: q.prefix.clone(),
                        shown: shown.iter().map(|s| ontology.entry(s.entry).id.clone()).collect(),
                    });
                }
                if let Some(rank) = shown.iter().position(|s| s.entry == m.entry) {
                    term.burden = overhead + j + 1;
                    term.autocompleted = true;
                    term.manual = !auto;
                    if let Some(log) = log.as_deref_mut() {
                        log.push(SessionEvent::Accept {
                            entry: ontology.entry(m.entry).id.clone(),
                            rank,
                            typed_prefix_len: j,
                        });
                    }
                    break;
                }
                if let Some(log) = log.as_deref_mut() {
                    log.push(SessionEvent::Key { ch: source[off..].chars().next().expect("offset is a char start") });
                }
            }
        }
        if !term.autocompleted {
            if let Some(log) = log.as_deref_mut() {
                log.push(SessionEvent::RetroAccept { entry: ontology.entry(m.entry).id.clone() });
            }
        }
        tags.push(Tag { entry: m.entry, start: m.start, end: m.end, synonym: source.to_string() });
        out.push(term);
    }
    Ok(out)
}
