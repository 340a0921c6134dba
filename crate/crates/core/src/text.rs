//! Tokenization and normalization shared by extraction, scope detection and
//! featurization.
//!
//! A word token is a maximal run of alphanumeric characters and `/`, so that
//! clinical shorthand such as `h/o` or `w/` survives as a single unit. Every
//! other non-whitespace character is emitted as a one-character punctuation
//! token. All offsets are UTF-8 byte offsets into the source text.

/// Characters that may appear inside a word token.
#[inline]
pub fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || c == '/'
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Word,
    Punct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token {
    pub start: usize,
    pub end: usize,
    pub kind: TokenKind,
}

impl Token {
    pub fn text<'a>(&self, source: &'a str) -> &'a str {
        &source[self.start..self.end]
    }

    pub fn is_word(&self) -> bool {
        self.kind == TokenKind::Word
    }
}

/// Splits `text` into word and punctuation tokens, in order.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut word_start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if is_token_char(c) {
            if word_start.is_none() {
                word_start = Some(i);
            }
            continue;
        }
        if let Some(s) = word_start.take() {
            tokens.push(Token { start: s, end: i, kind: TokenKind::Word });
        }
        if !c.is_whitespace() {
            tokens.push(Token { start: i, end: i + c.len_utf8(), kind: TokenKind::Punct });
        }
    }
    if let Some(s) = word_start {
        tokens.push(Token { start: s, end: text.len(), kind: TokenKind::Word });
    }
    tokens
}

/// Lowercased word tokens of `text`, without offsets.
pub fn words_lower(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(Token::is_word)
        .map(|t| t.text(text).to_lowercase())
        .collect()
}

/// Canonical form of a synonym: lowercase, leading and trailing non-token
/// characters stripped, internal whitespace collapsed to single spaces.
pub fn normalize_synonym(raw: &str) -> String {
    let lower = raw.to_lowercase();
    let trimmed = lower.trim_matches(|c: char| !is_token_char(c));
    collapse_whitespace(trimmed)
}

/// Lowercase and collapse whitespace, keeping punctuation (used for trigger
/// phrases such as `pmh:`).
pub fn normalize_phrase(raw: &str) -> String {
    collapse_whitespace(raw.to_lowercase().trim())
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// True when `s` consists only of word tokens separated by single spaces,
/// i.e. it can be matched token by token.
pub fn is_token_sequence(s: &str) -> bool {
    let toks = tokenize(s);
    !toks.is_empty()
        && toks.iter().all(Token::is_word)
        && toks.iter().map(|t| t.text(s)).collect::<Vec<_>>().join(" ") == s
}

/// A lowercased copy of a text that remembers where each lowered byte came
/// from, so matches found in the lowered copy map back to source offsets.
pub struct LoweredText {
    pub lower: String,
    origin: Vec<usize>,
}

impl LoweredText {
    pub fn new(text: &str) -> Self {
        let mut lower = String::with_capacity(text.len());
        let mut origin = Vec::with_capacity(text.len() + 1);
        for (i, c) in text.char_indices() {
            for lc in c.to_lowercase() {
                let before = lower.len();
                lower.push(lc);
                origin.extend(std::iter::repeat_n(i, lower.len() - before));
            }
        }
        origin.push(text.len());
        Self { lower, origin }
    }

    /// Source offset of a lowered start offset.
    pub fn source_start(&self, lowered: usize) -> usize {
        self.origin[lowered]
    }

    /// Source offset just past the character that ends at lowered offset `lowered`.
    pub fn source_end(&self, lowered: usize, source: &str) -> usize {
        if lowered == 0 {
            return 0;
        }
        let start = self.origin[lowered - 1];
        start + source[start..].chars().next().map_or(0, char::len_utf8)
    }
}

/// True when the character before `start` and the character at `end` are not
/// token characters.
pub fn on_word_boundary(text: &str, start: usize, end: usize) -> bool {
    let before_ok = text[..start].chars().next_back().is_none_or(|c| !is_token_char(c));
    let after_ok = text[end..].chars().next().is_none_or(|c| !is_token_char(c));
    before_ok && after_ok
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(s: &str) -> Vec<&str> {
        tokenize(s).iter().map(|t| t.text(s)).collect()
    }

    #[test]
    fn slash_jargon_is_one_token() {
        assert_eq!(texts("pt w/ h/o MS."), vec!["pt", "w/", "h/o", "MS", "."]);
    }

    #[test]
    fn punctuation_is_split() {
        assert_eq!(texts("no fever, chills"), vec!["no", "fever", ",", "chills"]);
        assert_eq!(texts("PMH: htn"), vec!["PMH", ":", "htn"]);
        assert!(tokenize("   ").is_empty());
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_synonym("  High   Blood Pressure. "), "high blood pressure");
        assert_eq!(normalize_synonym("h/o"), "h/o");
        assert_eq!(normalize_synonym("(HTN)"), "htn");
        assert_eq!(normalize_phrase(" PMH:  "), "pmh:");
    }

    #[test]
    fn token_sequence_check() {
        assert!(is_token_sequence("diabetes mellitus"));
        assert!(is_token_sequence("s/p"));
        assert!(!is_token_sequence("t-cell"));
        assert!(!is_token_sequence("crohn's"));
        assert!(!is_token_sequence(""));
    }

    #[test]
    fn lowered_offsets_map_back() {
        let src = "Ünder HTN";
        let lt = LoweredText::new(src);
        let pos = lt.lower.find("htn").unwrap();
        let s = lt.source_start(pos);
        let e = lt.source_end(pos + 3, src);
        assert_eq!(&src[s..e], "HTN");
    }

    #[test]
    fn boundaries() {
        assert!(on_word_boundary("has htn.", 4, 7));
        assert!(!on_word_boundary("nothing", 2, 5));
    }
}
