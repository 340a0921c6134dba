use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::features::{most_abnormal_vital, PopulationStats, SparseVector, TriageVitals, VitalBucket, VitalKind};
use crate::ontology::{ConceptType, EntryIdx};
use crate::ranking::dataset::{normalize_complaint, SymptomDataset, SymptomRow};
use crate::ranking::logistic::{BinaryLr, LrConfig};
use crate::ranking::{RankedItem, RankedList, RankingError};

/// Add-α smoothed symptom frequencies by chief complaint, optionally also by
/// the bucket of the most abnormal vital.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymptomTable {
    pub alpha: f64,
    pub use_vital: bool,
    pub symptoms: Vec<EntryIdx>,
    pub stats: PopulationStats,
    /// `complaint|vital:BUCKET` → per-symptom counts.
    pub cells: BTreeMap<String, Vec<u32>>,
    pub complaints: BTreeMap<String, Vec<u32>>,
    pub global: Vec<u32>,
}

impl SymptomTable {
    pub fn fit(dataset: &SymptomDataset, use_vital: bool, alpha: f64) -> Self {
        let n = dataset.symptoms.len();
        let slot: BTreeMap<EntryIdx, usize> = dataset.symptoms.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let mut t = Self {
            alpha,
            use_vital,
            symptoms: dataset.symptoms.clone(),
            stats: dataset.stats.clone(),
            cells: BTreeMap::new(),
            complaints: BTreeMap::new(),
            global: vec![0; n],
        };
        for row in &dataset.rows {
            let cell = t.cell_key(&row.complaint, &row.vitals);
            let targets: Vec<usize> = row.targets.iter().filter_map(|e| slot.get(e).copied()).collect();
            let bump = |v: &mut Vec<u32>| targets.iter().for_each(|&i| v[i] += 1);
            bump(&mut t.global);
            bump(t.complaints.entry(row.complaint.clone()).or_insert_with(|| vec![0; n]));
            if use_vital {
                bump(t.cells.entry(cell).or_insert_with(|| vec![0; n]));
            }
        }
        t
    }

    fn cell_key(&self, complaint: &str, vitals: &TriageVitals) -> String {
        format!("{}|{}", complaint, most_abnormal_vital(vitals, &self.stats).key())
    }

    fn smoothed(&self, counts: &[u32]) -> Vec<f64> {
        let total: f64 = counts.iter().map(|&c| c as f64).sum();
        let denom = total + self.alpha * counts.len() as f64;
        counts.iter().map(|&c| (c as f64 + self.alpha) / denom).collect()
    }

    /// Backoff chain of count vectors, most specific first.
    fn levels(&self, complaint: &str, vitals: &TriageVitals) -> Vec<&Vec<u32>> {
        let complaint = normalize_complaint(complaint);
        let mut out = Vec::with_capacity(3);
        if self.use_vital {
            if let Some(c) = self.cells.get(&self.cell_key(&complaint, vitals)) {
                out.push(c);
            }
        }
        if let Some(c) = self.complaints.get(&complaint) {
            out.push(c);
        }
        out.push(&self.global);
        out
    }

    /// Scores from the most specific seen level; ties fall through to the
    /// next level, then to entry order.
    pub fn rank(&self, complaint: &str, vitals: &TriageVitals) -> RankedList {
        let levels: Vec<Vec<f64>> = self.levels(complaint, vitals).into_iter().map(|c| self.smoothed(c)).collect();
        let mut idx: Vec<usize> = (0..self.symptoms.len()).collect();
        idx.sort_by(|&a, &b| {
            levels
                .iter()
                .map(|l| l[b].total_cmp(&l[a]))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(self.symptoms[a].cmp(&self.symptoms[b]))
        });
        RankedList {
            concept_type: ConceptType::Symptom,
            items: idx.into_iter().map(|i| RankedItem { entry: self.symptoms[i], score: levels[0][i] }).collect(),
        }
    }
}

/// One-hot chief complaint plus one-hot bucket of every present vital.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymptomFeatures {
    pub complaints: Vec<String>,
    pub vital_labels: Vec<(VitalKind, VitalBucket)>,
}

impl SymptomFeatures {
    pub fn fit(rows: &[SymptomRow]) -> Self {
        let complaints: BTreeSet<String> = rows.iter().map(|r| r.complaint.clone()).collect();
        let vital_labels =
            VitalKind::ALL.into_iter().flat_map(|k| k.labels().iter().map(move |&b| (k, b))).collect();
        Self { complaints: complaints.into_iter().collect(), vital_labels }
    }

    pub fn dim(&self) -> usize {
        self.complaints.len() + self.vital_labels.len()
    }

    /// Indices of the active binary features.
    pub fn active(&self, complaint: &str, vitals: &TriageVitals) -> Vec<usize> {
        let complaint = normalize_complaint(complaint);
        let mut out = Vec::new();
        if let Ok(i) = self.complaints.binary_search(&complaint) {
            out.push(i);
        }
        for kb in vitals.buckets() {
            if let Some(j) = self.vital_labels.iter().position(|&x| x == kb) {
                out.push(self.complaints.len() + j);
            }
        }
        out
    }

    pub fn encode(&self, complaint: &str, vitals: &TriageVitals) -> SparseVector {
        SparseVector::from_pairs(self.active(complaint, vitals).into_iter().map(|i| (i as u32, 1.0)))
    }
}

/// One-vs-rest logistic regression per symptom, with balanced negatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymptomLr {
    pub features: SymptomFeatures,
    pub symptoms: Vec<EntryIdx>,
    pub models: Vec<Option<BinaryLr>>,
    pub prevalence: Vec<f64>,
    pub epsilon: f64,
}

impl SymptomLr {
    pub fn train(
        dataset: &SymptomDataset,
        lr: LrConfig,
        min_positives: usize,
        epsilon: f64,
        seed: u64,
    ) -> Result<Self, RankingError> {
        if dataset.rows.is_empty() {
            return Err(RankingError::EmptyDataset);
        }
        let features = SymptomFeatures::fit(&dataset.rows);
        let xs: Vec<SparseVector> = dataset.rows.iter().map(|r| features.encode(&r.complaint, &r.vitals)).collect();
        let n = dataset.rows.len() as f64;
        let prevalence =
            dataset.symptoms.iter().map(|s| dataset.rows.iter().filter(|r| r.targets.contains(s)).count() as f64 / n).collect();
        let models = dataset
            .symptoms
            .par_iter()
            .map(|s| -> Result<Option<BinaryLr>, RankingError> {
                let pos: Vec<usize> = (0..xs.len()).filter(|&i| dataset.rows[i].targets.contains(s)).collect();
                if pos.len() < min_positives {
                    return Ok(None);
                }
                let neg: Vec<usize> = (0..xs.len()).filter(|&i| !dataset.rows[i].targets.contains(s)).collect();
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(s.get() as u64));
                let sampled: Vec<usize> = neg.choose_multiple(&mut rng, pos.len().min(neg.len())).copied().collect();
                let rows: Vec<(&SparseVector, bool)> =
                    pos.iter().map(|&i| (&xs[i], true)).chain(sampled.iter().map(|&i| (&xs[i], false))).collect();
                Ok(Some(BinaryLr::fit(&rows, features.dim(), lr)?))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { features, symptoms: dataset.symptoms.clone(), models, prevalence, epsilon })
    }

    pub fn rank(&self, complaint: &str, vitals: &TriageVitals) -> RankedList {
        let x = self.features.encode(complaint, vitals);
        RankedList::from_scores(
            ConceptType::Symptom,
            self.symptoms.iter().zip(&self.models).zip(&self.prevalence).map(|((&s, m), &p)| {
                (s, m.as_ref().map_or(self.epsilon * p, |m| m.predict(&x)))
            }),
        )
    }
}

/// Bernoulli naive Bayes per symptom with add-one smoothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymptomNb {
    pub features: SymptomFeatures,
    pub symptoms: Vec<EntryIdx>,
    /// `P(y = 1)` per symptom.
    pub prior: Vec<f64>,
    /// `P(x_j = 1 | y = 1)` and `P(x_j = 1 | y = 0)`, per symptom, per feature.
    pub likelihood_pos: Vec<Vec<f64>>,
    pub likelihood_neg: Vec<Vec<f64>>,
}

impl SymptomNb {
    pub fn train(dataset: &SymptomDataset) -> Result<Self, RankingError> {
        if dataset.rows.is_empty() {
            return Err(RankingError::EmptyDataset);
        }
        let features = SymptomFeatures::fit(&dataset.rows);
        let active: Vec<Vec<usize>> = dataset.rows.iter().map(|r| features.active(&r.complaint, &r.vitals)).collect();
        let d = features.dim();
        let n = dataset.rows.len();
        let mut prior = Vec::new();
        let mut lp = Vec::new();
        let mut ln = Vec::new();
        for s in &dataset.symptoms {
            let mut on_pos = vec![0usize; d];
            let mut on_neg = vec![0usize; d];
            let mut n_pos = 0;
            for (row, act) in dataset.rows.iter().zip(&active) {
                let target = if row.targets.contains(s) {
                    n_pos += 1;
                    &mut on_pos
                } else {
                    &mut on_neg
                };
                act.iter().for_each(|&j| target[j] += 1);
            }
            let n_neg = n - n_pos;
            prior.push((n_pos as f64 + 1.0) / (n as f64 + 2.0));
            lp.push(on_pos.iter().map(|&c| (c as f64 + 1.0) / (n_pos as f64 + 2.0)).collect());
            ln.push(on_neg.iter().map(|&c| (c as f64 + 1.0) / (n_neg as f64 + 2.0)).collect());
        }
        Ok(Self { features, symptoms: dataset.symptoms.clone(), prior, likelihood_pos: lp, likelihood_neg: ln })
    }

    /// Posterior `P(y = 1 | x)` for one symptom slot.
    pub fn posterior(&self, slot: usize, active: &[usize]) -> f64 {
        let mut on = vec![false; self.features.dim()];
        active.iter().for_each(|&j| on[j] = true);
        let (lp, ln) = (&self.likelihood_pos[slot], &self.likelihood_neg[slot]);
        let mut log_pos = self.prior[slot].ln();
        let mut log_neg = (1.0 - self.prior[slot]).ln();
        for j in 0..on.len() {
            if on[j] {
                log_pos += lp[j].ln();
                log_neg += ln[j].ln();
            } else {
                log_pos += (1.0 - lp[j]).ln();
                log_neg += (1.0 - ln[j]).ln();
            }
        }
        1.0 / (1.0 + (log_neg - log_pos).exp())
    }

    pub fn rank(&self, complaint: &str, vitals: &TriageVitals) -> RankedList {
        let active = self.features.active(complaint, vitals);
        RankedList::from_scores(
            ConceptType::Symptom,
            self.symptoms.iter().enumerate().map(|(i, &s)| (s, self.posterior(i, &active))),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(c: &str, temp: f64, targets: &[u32]) -> SymptomRow {
        SymptomRow {
            complaint: c.into(),
            vitals: TriageVitals { temperature_f: Some(temp), ..TriageVitals::default() },
            targets: targets.iter().map(|&i| EntryIdx(i)).collect(),
        }
    }

    fn dataset(rows: Vec<SymptomRow>) -> SymptomDataset {
        let stats = PopulationStats::fit(rows.iter().map(|r| &r.vitals));
        SymptomDataset { rows, stats, symptoms: (0..4).map(EntryIdx).collect() }
    }

    #[test]
    fn degenerate_complaint() {
        let d = dataset(vec![row("cough", 98.0, &[2]), row("cough", 98.0, &[2]), row("fall", 98.0, &[0, 1])]);
        let t = SymptomTable::fit(&d, false, 1e-9);
        let l = t.rank("cough", &TriageVitals::default());
        assert_eq!(l.items[0].entry, EntryIdx(2));
        assert!((l.items[0].score - 1.0).abs() < 1e-6);
    }

    #[test]
    fn unseen_complaint_uses_global_order() {
        let d = dataset(vec![row("cough", 98.0, &[2, 3]), row("fall", 98.0, &[3]), row("fall", 98.0, &[1, 3])]);
        let t = SymptomTable::fit(&d, true, 1.0);
        let l = t.rank("rash", &TriageVitals::default());
        let order: Vec<u32> = l.entries().map(|e| e.0).collect();
        assert_eq!(order, vec![3, 1, 2, 0]);
    }

    #[test]
    fn smoothed_scores_match_hand_count() {
        let d = dataset(vec![row("cough", 98.0, &[2, 3]), row("cough", 98.0, &[2])]);
        let t = SymptomTable::fit(&d, false, 1.0);
        let l = t.rank("Cough", &TriageVitals::default());
        // counts [0,0,2,1], total 3, |S| = 4 → (c + 1) / 7
        let score = |i| l.items.iter().find(|x| x.entry == EntryIdx(i)).unwrap().score;
        assert!((score(2) - 3.0 / 7.0).abs() < 1e-12);
        assert!((score(3) - 2.0 / 7.0).abs() < 1e-12);
        assert!((score(0) - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn vital_cell_specializes() {
        let mut rows = Vec::new();
        for i in 0..20 {
            rows.push(row("cough", 98.0 + (i % 5) as f64 * 0.1, &[1]));
        }
        rows.push(row("cough", 104.0, &[0]));
        let d = dataset(rows);
        let with = SymptomTable::fit(&d, true, 1.0);
        let without = SymptomTable::fit(&d, false, 1.0);
        let hot = TriageVitals { temperature_f: Some(104.0), ..TriageVitals::default() };
        assert_eq!(with.rank("cough", &hot).items[0].entry, EntryIdx(0));
        assert_eq!(without.rank("cough", &hot).items[0].entry, EntryIdx(1));
    }

    #[test]
    fn nb_matches_closed_form() {
        // One complaint feature plus temperature LOW/NORMAL/HIGH.
        let rows = vec![
            row("a", 98.0, &[0]),
            row("a", 98.0, &[0]),
            row("a", 101.0, &[]),
            row("b", 98.0, &[0]),
            row("b", 101.0, &[]),
        ];
        let d = dataset(rows);
        let nb = SymptomNb::train(&d).unwrap();
        let f = &nb.features;
        assert_eq!(f.complaints, vec!["a".to_string(), "b".to_string()]);
        let x = f.active("a", &TriageVitals { temperature_f: Some(98.0), ..TriageVitals::default() });
        // Symptom 0: 3 positive rows, 2 negative, n = 5.
        let prior: f64 = 4.0 / 7.0;
        let d_total = f.dim();
        let mut on = vec![false; d_total];
        x.iter().for_each(|&j| on[j] = true);
        let count = |j: usize, pos: bool| -> f64 {
            d.rows
                .iter()
                .filter(|r| r.targets.contains(&EntryIdx(0)) == pos)
                .filter(|r| f.active(&r.complaint, &r.vitals).contains(&j))
                .count() as f64
        };
        let (mut lp, mut ln) = (prior.ln(), (1.0 - prior).ln());
        for j in 0..d_total {
            let p1 = (count(j, true) + 1.0) / 5.0;
            let p0 = (count(j, false) + 1.0) / 4.0;
            lp += if on[j] { p1.ln() } else { (1.0 - p1).ln() };
            ln += if on[j] { p0.ln() } else { (1.0 - p0).ln() };
        }
        let expect = lp.exp() / (lp.exp() + ln.exp());
        assert!((nb.posterior(0, &x) - expect).abs() < 1e-12);
    }

    #[test]
    fn lr_and_nb_emit_permutations() {
        let mut rows = Vec::new();
        for i in 0..60 {
            let c = if i % 2 == 0 { "cough" } else { "fall" };
            let t: &[u32] = if i % 2 == 0 { &[2] } else { &[0] };
            rows.push(row(c, 97.5 + (i % 7) as f64, t));
        }
        let d = dataset(rows);
        let lr = SymptomLr::train(&d, LrConfig::default(), 10, 1e-4, 1).unwrap();
        let nb = SymptomNb::train(&d).unwrap();
        for l in [lr.rank("cough", &TriageVitals::default()), nb.rank("cough", &TriageVitals::default())] {
            let mut es: Vec<u32> = l.entries().map(|e| e.0).collect();
            assert_eq!(l.items[0].entry, EntryIdx(2));
            es.sort();
            assert_eq!(es, vec![0, 1, 2, 3]);
        }
    }
}
