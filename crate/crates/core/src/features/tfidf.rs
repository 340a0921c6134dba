use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::features::FeatureError;
use crate::text::words_lower;

/// Sparse vector of `(index, weight)` pairs with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Builds from unordered pairs; duplicate indices are summed, zeros dropped.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let mut m: BTreeMap<u32, f64> = BTreeMap::new();
        for (i, w) in pairs {
            *m.entry(i).or_default() += w;
        }
        Self { entries: m.into_iter().filter(|(_, w)| *w != 0.0).collect() }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().map(|&(i, w)| (i as usize, w))
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&(index as u32), |&(i, _)| i)
            .map_or(0.0, |k| self.entries[k].1)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, w)| w * dense[i as usize]).sum()
    }
}

/// Unigram and bigram terms of a text, in order of occurrence.
pub fn ngram_terms(text: &str) -> Vec<String> {
    let words = words_lower(text);
    let mut terms = words.clone();
    terms.extend(words.windows(2).map(|w| format!("{} {}", w[0], w[1])));
    terms
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TfidfConfig {
    pub min_df: usize,
}

impl Default for TfidfConfig {
    fn default() -> Self {
        Self { min_df: 2 }
    }
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    terms: Vec<String>,
    df: Vec<u32>,
    n_docs: usize,
}

/// Fitted unigram+bigram vocabulary with smooth idf
/// `ln((1 + N) / (1 + df)) + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyFile", into = "VocabularyFile")]
pub struct TfidfVocabulary {
    terms: Vec<String>,
    df: Vec<u32>,
    idf: Vec<f64>,
    index: HashMap<String, u32>,
    n_docs: usize,
}

impl TryFrom<VocabularyFile> for TfidfVocabulary {
    type Error = String;

    fn try_from(f: VocabularyFile) -> Result<Self, Self::Error> {
        if f.terms.len() != f.df.len() {
            return Err("vocabulary terms and df lengths differ".into());
        }
        Ok(Self::assemble(f.terms, f.df, f.n_docs))
    }
}

impl From<TfidfVocabulary> for VocabularyFile {
    fn from(v: TfidfVocabulary) -> Self {
        Self { terms: v.terms, df: v.df, n_docs: v.n_docs }
    }
}

impl TfidfVocabulary {
    pub fn fit<S: AsRef<str>>(corpus: &[S], config: TfidfConfig) -> Result<Self, FeatureError> {
        if corpus.is_empty() {
            return Err(FeatureError::EmptyCorpus);
        }
        let mut df: HashMap<String, u32> = HashMap::new();
        for doc in corpus {
            let unique: HashSet<String> = ngram_terms(doc.as_ref()).into_iter().collect();
            for t in unique {
                *df.entry(t).or_default() += 1;
            }
        }
        let mut kept: Vec<(String, u32)> =
            df.into_iter().filter(|(_, n)| *n as usize >= config.min_df.max(1)).collect();
        kept.sort();
        let (terms, df) = kept.into_iter().unzip();
        Ok(Self::assemble(terms, df, corpus.len()))
    }

    fn assemble(terms: Vec<String>, df: Vec<u32>, n_docs: usize) -> Self {
        let idf = df.iter().map(|&d| ((1.0 + n_docs as f64) / (1.0 + d as f64)).ln() + 1.0).collect();
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Self { terms, df, idf, index, n_docs }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).map(|&i| i as usize)
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn df(&self, term: &str) -> Option<u32> {
        self.index_of(term).map(|i| self.df[i])
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.index_of(term).map(|i| self.idf[i])
    }

    /// L2-normalized tf·idf of in-vocabulary terms; zero vector when nothing
    /// is in vocabulary.
    pub fn encode(&self, text: &str) -> SparseVector {
        let pairs: Vec<(u32, f64)> = ngram_terms(text)
            .into_iter()
            .filter_map(|t| self.index.get(&t).map(|&i| (i, self.idf[i as usize])))
            .collect();
        let v = SparseVector::from_pairs(pairs);
        let norm = v.norm();
        if norm == 0.0 {
            return SparseVector::default();
        }
        SparseVector { entries: v.entries.into_iter().map(|(i, w)| (i, w / norm)).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit1(corpus: &[&str]) -> TfidfVocabulary {
        TfidfVocabulary::fit(corpus, TfidfConfig { min_df: 1 }).unwrap()
    }

    #[test]
    fn document_frequencies() {
        let v = fit1(&["a b", "a c"]);
        assert_eq!(v.df("a"), Some(2));
        assert_eq!(v.df("b"), Some(1));
        assert_eq!(v.df("a b"), Some(1));
        assert_eq!(v.df("b c"), None);
        assert_eq!(v.n_docs(), 2);
    }

    #[test]
    fn min_df_filters() {
        let v = TfidfVocabulary::fit(&["a b", "a c"], TfidfConfig::default()).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.index_of("a"), Some(0));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let empty: [&str; 0] = [];
        assert!(matches!(TfidfVocabulary::fit(&empty, TfidfConfig::default()), Err(FeatureError::EmptyCorpus)));
    }

    #[test]
    fn encode_edge_cases() {
        let v = fit1(&["sob cough", "fever", "sob"]);
        assert!(v.encode("").is_zero());
        assert!(v.encode("zebra").is_zero());
        let one = v.encode("fever");
        assert_eq!(one.nnz(), 1);
        assert!((one.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn encode_weights_by_tf_and_idf() {
        let v = fit1(&["sob cough", "fever", "sob"]);
        let x = v.encode("sob sob cough");
        // N=3: idf(sob)=ln(4/3)+1, idf(cough)=ln(4/2)+1; bigrams "sob sob" and "sob cough"
        let idf_sob = (4.0f64 / 3.0).ln() + 1.0;
        let idf_cough = 2.0f64.ln() + 1.0;
        let idf_sob_cough = 2.0f64.ln() + 1.0;
        let raw = [2.0 * idf_sob, idf_cough, idf_sob_cough];
        let norm = raw.iter().map(|w| w * w).sum::<f64>().sqrt();
        assert!((x.get(v.index_of("sob").unwrap()) - raw[0] / norm).abs() < 1e-12);
        assert!((x.get(v.index_of("cough").unwrap()) - raw[1] / norm).abs() < 1e-12);
        assert!((x.get(v.index_of("sob cough").unwrap()) - raw[2] / norm).abs() < 1e-12);
        assert_eq!(x.nnz(), 3);
    }

    #[test]
    fn serde_round_trip() {
        let v = fit1(&["pt with cp", "cp and sob"]);
        let back: TfidfVocabulary = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(v, back);
    }
}
