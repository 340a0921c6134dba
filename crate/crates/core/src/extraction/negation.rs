//! Forward-scope negation detection over a token stream.
//!
//! A mention is negated when a pre-trigger phrase ends within `window` tokens
//! before the mention's first token and no terminator phrase lies between the
//! trigger and the mention. Continuation tokens (`,`, `and`, `or`) are ordinary
//! tokens: they count toward the window but do not close the scope.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::text::{normalize_phrase, tokenize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Polarity {
    Positive,
    Negated,
}

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("reading lexicon: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing lexicon: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("negation window must be at least 1")]
    ZeroWindow,
    #[error("empty phrase in lexicon")]
    EmptyPhrase,
}

/// Serialized lexicon: `{pre_triggers: [], terminators: [], window: N}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegationLexiconFile {
    pub pre_triggers: Vec<String>,
    pub terminators: Vec<String>,
    pub window: usize,
}

#[derive(Debug, Clone)]
pub struct NegationLexicon {
    pub pre_triggers: Vec<Vec<String>>,
    pub terminators: Vec<Vec<String>>,
    pub window: usize,
}

impl NegationLexicon {
    pub fn from_file(file: NegationLexiconFile) -> Result<Self, LexiconError> {
        if file.window == 0 {
            return Err(LexiconError::ZeroWindow);
        }
        let compile = |phrases: &[String]| -> Result<Vec<Vec<String>>, LexiconError> {
            phrases
                .iter()
                .map(|p| {
                    let p = normalize_phrase(p);
                    let toks: Vec<String> = tokenize(&p).iter().map(|t| t.text(&p).to_string()).collect();
                    if toks.is_empty() {
                        Err(LexiconError::EmptyPhrase)
                    } else {
                        Ok(toks)
                    }
                })
                .collect()
        };
        Ok(Self {
            pre_triggers: compile(&file.pre_triggers)?,
            terminators: compile(&file.terminators)?,
            window: file.window,
        })
    }

    pub fn from_json(raw: &str) -> Result<Self, LexiconError> {
        Self::from_file(serde_json::from_str(raw)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window.max(1);
        self
    }
}

impl Default for NegationLexicon {
    fn default() -> Self {
        Self::from_json(include_str!("../../data/negation.json")).expect("bundled negation lexicon is valid")
    }
}

fn phrase_ends_at(tokens: &[&str], end: usize, phrase: &[String]) -> bool {
    let n = phrase.len();
    end + 1 >= n && tokens[end + 1 - n..=end].iter().zip(phrase).all(|(t, p)| t == p)
}

/// Polarity for each mention. `tokens` are the lowercased texts of every token
/// (words and punctuation) of the source; `mentions` are `(first, last)` token
/// index pairs.
pub fn detect_negation(tokens: &[&str], mentions: &[(usize, usize)], lexicon: &NegationLexicon) -> Vec<Polarity> {
    let n = tokens.len();
    let mut trigger_end = vec![false; n];
    let mut terminator_end = vec![false; n];
    for k in 0..n {
        trigger_end[k] = lexicon.pre_triggers.iter().any(|p| phrase_ends_at(tokens, k, p));
        terminator_end[k] = lexicon.terminators.iter().any(|p| phrase_ends_at(tokens, k, p));
    }

    mentions
        .iter()
        .map(|&(first, _)| {
            let lowest = first.saturating_sub(lexicon.window);
            for k in (lowest..first).rev() {
                if terminator_end[k] {
                    return Polarity::Positive;
                }
                if trigger_end[k] {
                    return Polarity::Negated;
                }
            }
            Polarity::Positive
        })
        .collect()
}
