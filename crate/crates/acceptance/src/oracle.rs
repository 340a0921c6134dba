//! Slow, direct reimplementations. Nothing here calls into the library
//! under test beyond plain data types.

use std::collections::HashSet;

/// A word or single punctuation character, lowercased, with byte offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tok {
    pub start: usize,
    pub end: usize,
    pub lower: String,
    pub word: bool,
}

fn word_char(c: char) -> bool {
    c == '/' || c.is_alphanumeric()
}

pub fn tokens(text: &str) -> Vec<Tok> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (s, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if word_char(c) {
            let mut j = i;
            while j < chars.len() && word_char(chars[j].1) {
                j += 1;
            }
            let e = chars.get(j).map_or(text.len(), |x| x.0);
            out.push(Tok { start: s, end: e, lower: text[s..e].to_lowercase(), word: true });
            i = j;
        } else {
            let e = s + c.len_utf8();
            out.push(Tok { start: s, end: e, lower: text[s..e].to_lowercase(), word: false });
            i += 1;
        }
    }
    out
}

/// Negation phrases as token lists.
#[derive(Debug, Clone)]
pub struct Negation {
    pub triggers: Vec<Vec<String>>,
    pub terminators: Vec<Vec<String>>,
    pub window: usize,
}

impl Negation {
    /// The lexicon the library ships with, written out by hand.
    pub fn shipped() -> Self {
        let split = |p: &[&str]| -> Vec<Vec<String>> {
            p.iter().map(|s| s.split(' ').map(str::to_string).collect()).collect()
        };
        Self {
            triggers: split(&[
                "no",
                "not",
                "denies",
                "denied",
                "without",
                "negative for",
                "no evidence of",
                "no signs of",
                "absence of",
                "free of",
                "never had",
            ]),
            terminators: split(&["but", "however", "although", "though", "except", "yet", "which", ".", ";", ":"]),
            window: 6,
        }
    }

    fn ends_at(toks: &[Tok], k: usize, phrases: &[Vec<String>]) -> bool {
        phrases.iter().any(|p| p.len() <= k + 1 && p.iter().zip(&toks[k + 1 - p.len()..=k]).all(|(a, t)| *a == t.lower))
    }

    /// Negated iff some trigger ends at `t` in the window before `first` and
    /// no terminator ends anywhere in `t..first`.
    pub fn negated(&self, toks: &[Tok], first: usize) -> bool {
        let lo = first.saturating_sub(self.window);
        (lo..first).any(|t| {
            Self::ends_at(toks, t, &self.triggers) && !(t..first).any(|k| Self::ends_at(toks, k, &self.terminators))
        })
    }
}

/// One ontology entry, as the oracle sees it.
#[derive(Debug, Clone)]
pub struct OracleEntry {
    pub id: String,
    pub synonyms: Vec<String>,
    pub frequency: u64,
}

/// Leftmost-longest matching by trying every synonym at every word token,
/// emitted as the JSON lines `scribe extract` prints.
pub fn extract_jsonl(text: &str, entries: &[OracleEntry], negation: &Negation) -> Vec<String> {
    let toks = tokens(text);
    let mut out = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let mut best: Option<(usize, &str)> = None;
        for e in entries {
            for syn in &e.synonyms {
                let parts: Vec<&str> = syn.split(' ').collect();
                let n = parts.len();
                let fits = i + n <= toks.len() && (0..n).all(|k| toks[i + k].word && toks[i + k].lower == parts[k]);
                if fits && best.is_none_or(|(m, _)| n > m) {
                    best = Some((n, syn));
                }
            }
        }
        let Some((n, syn)) = best else {
            i += 1;
            continue;
        };
        let owner = entries
            .iter()
            .filter(|e| e.synonyms.iter().any(|s| s == syn))
            .max_by(|a, b| a.frequency.cmp(&b.frequency).then(b.id.cmp(&a.id)))
            .expect("matched synonym has an owner");
        let polarity = if negation.negated(&toks, i) { "NEGATED" } else { "POSITIVE" };
        out.push(format!(
            r#"{{"start":{},"end":{},"synonym":"{}","entry":"{}","polarity":"{}"}}"#,
            toks[i].start,
            toks[i + n - 1].end,
            syn,
            owner.id,
            polarity
        ));
        i += n;
    }
    out
}

/// Shifted-rank MRR, summed in ranking order.
pub fn mrr(ranking: &[u8], truth: &HashSet<u8>) -> f64 {
    let t = truth.len() as f64;
    let mut sum = 0.0;
    for (pos, r) in (1..).zip(ranking) {
        if truth.contains(r) {
            let shifted = pos as f64 - t;
            sum += 1.0 / if shifted < 1.0 { 1.0 } else { shifted };
        }
    }
    sum / t
}

/// Average precision, summed in ranking order.
pub fn average_precision(ranking: &[u8], truth: &HashSet<u8>) -> f64 {
    let mut hits = 0.0;
    let mut sum = 0.0;
    for (pos, r) in (1..).zip(ranking) {
        if truth.contains(r) {
            hits += 1.0;
            sum += hits / pos as f64;
        }
    }
    sum / truth.len() as f64
}

/// A condition term for the ordering oracle.
#[derive(Debug, Clone)]
pub struct TermFixture {
    pub id: String,
    pub bucket: String,
    pub frequency: u64,
    pub in_ehr: bool,
}

/// Sorts by the tuple (absent from the record, bucket position, −frequency,
/// id). Buckets not in `bucket_ranking` share the position after the last.
pub fn term_order(terms: &[TermFixture], bucket_ranking: &[String]) -> Vec<String> {
    let mut keyed: Vec<(u8, usize, i128, &str)> = terms
        .iter()
        .map(|t| {
            let pos = bucket_ranking.iter().position(|b| *b == t.bucket).unwrap_or(bucket_ranking.len());
            (u8::from(!t.in_ehr), pos, -(t.frequency as i128), t.id.as_str())
        })
        .collect();
    keyed.sort();
    keyed.into_iter().map(|k| k.3.to_string()).collect()
}

/// Every ordering of `0..n`.
pub fn permutations(n: u8) -> Vec<Vec<u8>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for at in 0..=p.len() {
            let mut q = p.clone();
            q.insert(at, n - 1);
            out.push(q);
        }
    }
    out
}
