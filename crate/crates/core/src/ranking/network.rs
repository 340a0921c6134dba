use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::{SparseVector, TfidfVocabulary};
use crate::ontology::Ontology;
use crate::ranking::dataset::{ConditionDataset, ConditionRow};
use crate::ranking::logistic::sigmoid;
use crate::ranking::RankingError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub hidden_text: usize,
    pub hidden_ehr: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            hidden_text: 64,
            hidden_ehr: 32,
            epochs: 30,
            batch_size: 32,
            learning_rate: 0.05,
            momentum: 0.9,
            l2: 1e-5,
            seed: 7,
        }
    }
}

/// Row-major dense matrix, serialized as `{shape: [rows, cols], data}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixFile", into = "MatrixFile")]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    shape: [usize; 2],
    data: Vec<f64>,
}

impl TryFrom<MatrixFile> for Matrix {
    type Error = String;

    fn try_from(f: MatrixFile) -> Result<Self, Self::Error> {
        if f.shape[0] * f.shape[1] != f.data.len() {
            return Err(format!("matrix shape {:?} does not match {} values", f.shape, f.data.len()));
        }
        Ok(Matrix { rows: f.shape[0], cols: f.shape[1], data: f.data })
    }
}

impl From<Matrix> for MatrixFile {
    fn from(m: Matrix) -> Self {
        MatrixFile { shape: [m.rows, m.cols], data: m.data }
    }
}

impl Matrix {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    fn glorot(rows: usize, cols: usize, fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Self {
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        Self { rows, cols, data: (0..rows * cols).map(|_| rng.random_range(-a..a)).collect() }
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Parameters of the dual-branch network. `wt` is stored `|V| × h_t` and `we`
/// `B × h_e` so a sparse input touches only its own rows; `wo` is
/// `K × (h_t + h_e)` for `K` output buckets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkWeights {
    pub wt: Matrix,
    pub bt: Vec<f64>,
    pub we: Matrix,
    pub be: Vec<f64>,
    pub wo: Matrix,
    pub bo: Vec<f64>,
}

/// Gradients, shaped like [`NetworkWeights`].
pub type NetworkGradients = NetworkWeights;

impl NetworkWeights {
    fn zeros_like(&self) -> Self {
        Self {
            wt: Matrix::zeros(self.wt.rows, self.wt.cols),
            bt: vec![0.0; self.bt.len()],
            we: Matrix::zeros(self.we.rows, self.we.cols),
            be: vec![0.0; self.be.len()],
            wo: Matrix::zeros(self.wo.rows, self.wo.cols),
            bo: vec![0.0; self.bo.len()],
        }
    }

    fn slices(&self) -> [&[f64]; 6] {
        [&self.wt.data, &self.bt, &self.we.data, &self.be, &self.wo.data, &self.bo]
    }

    fn slices_mut(&mut self) -> [&mut Vec<f64>; 6] {
        [&mut self.wt.data, &mut self.bt, &mut self.we.data, &mut self.be, &mut self.wo.data, &mut self.bo]
    }

    /// All parameters concatenated in declaration order.
    pub fn flatten(&self) -> Vec<f64> {
        self.slices().concat()
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let mut off = 0;
        for s in self.slices_mut() {
            let n = s.len();
            s.copy_from_slice(&flat[off..off + n]);
            off += n;
        }
    }
}

struct Activations {
    ht: Vec<f64>,
    he: Vec<f64>,
    logits: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionNetwork {
    pub config: NetworkConfig,
    pub vocab: TfidfVocabulary,
    /// Ids of the buckets of the EHR input, in input order.
    pub input_buckets: Vec<String>,
    /// Bucket index of every output unit.
    pub output_buckets: Vec<usize>,
    pub weights: NetworkWeights,
    /// Mean training loss after the last epoch.
    pub final_loss: Option<f64>,
}

impl ConditionNetwork {
    /// Randomly initialized network; output biases start at the label log-odds
    /// when `prevalence` is given.
    pub fn init(
        config: NetworkConfig,
        vocab: TfidfVocabulary,
        input_buckets: Vec<String>,
        output_buckets: Vec<usize>,
        prevalence: Option<&[f64]>,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let (v, b, k) = (vocab.len(), input_buckets.len(), output_buckets.len());
        let (ht, he) = (config.hidden_text, config.hidden_ehr);
        let bo = match prevalence {
            Some(p) => p.iter().map(|&q| (q.clamp(1e-4, 1.0 - 1e-4) / (1.0 - q.clamp(1e-4, 1.0 - 1e-4))).ln()).collect(),
            None => vec![0.0; k],
        };
        let weights = NetworkWeights {
            wt: Matrix::glorot(v, ht, v.min(64), ht, &mut rng),
            bt: vec![0.01; ht],
            we: Matrix::glorot(b, he, b.min(16), he, &mut rng),
            be: vec![0.01; he],
            wo: Matrix::glorot(k, ht + he, ht + he, k, &mut rng),
            bo,
        };
        Self { config, vocab, input_buckets, output_buckets, weights, final_loss: None }
    }

    pub fn train(dataset: &ConditionDataset, ontology: &Ontology, config: NetworkConfig) -> Result<Self, RankingError> {
        if dataset.rows.is_empty() {
            return Err(RankingError::EmptyDataset);
        }
        if dataset.bucket_count != ontology.bucket_count() {
            return Err(RankingError::DimensionMismatch { expected: ontology.bucket_count(), got: dataset.bucket_count });
        }
        let input_buckets: Vec<String> = ontology.buckets().iter().map(|b| b.id.clone()).collect();
        let outputs = dataset.condition_buckets.clone();
        let n = dataset.rows.len() as f64;
        let prevalence: Vec<f64> =
            outputs.iter().map(|&b| dataset.rows.iter().filter(|r| r.is_target(b)).count() as f64 / n).collect();
        let mut net = Self::init(config, dataset.vocab.clone(), input_buckets, outputs, Some(&prevalence));
        net.fit(&dataset.rows)?;
        Ok(net)
    }

    /// Mini-batch SGD with momentum on the summed per-bucket cross-entropy.
    pub fn fit(&mut self, rows: &[ConditionRow]) -> Result<(), RankingError> {
        let cfg = self.config;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9);
        let mut order: Vec<usize> = (0..rows.len()).collect();
        let mut velocity = self.weights.zeros_like();
        let mut grads = self.weights.zeros_like();
        for epoch in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for (batch, chunk) in order.chunks(cfg.batch_size.max(1)).enumerate() {
                zero(&mut grads);
                let mut loss = 0.0;
                for &i in chunk {
                    loss += self.accumulate(&rows[i], &mut grads);
                }
                if !loss.is_finite() {
                    log::error!("network loss {loss} at epoch {epoch} batch {batch}");
                    return Err(RankingError::NonFiniteLoss { epoch, batch });
                }
                let scale = 1.0 / chunk.len() as f64;
                let params = self.weights.slices_mut();
                let vel = velocity.slices_mut();
                let g = grads.slices();
                for ((p, v), g) in params.into_iter().zip(vel).zip(g) {
                    for j in 0..p.len() {
                        v[j] = cfg.momentum * v[j] - cfg.learning_rate * (g[j] * scale + cfg.l2 * p[j]);
                        p[j] += v[j];
                    }
                }
            }
            log::debug!("epoch {epoch}: loss {:.5}", self.mean_loss(rows));
        }
        self.final_loss = Some(self.mean_loss(rows));
        Ok(())
    }

    fn forward(&self, text: &SparseVector, ehr: &[usize]) -> Activations {
        let w = &self.weights;
        let mut ht = w.bt.clone();
        for (i, x) in text.iter() {
            for (h, &wt) in ht.iter_mut().zip(w.wt.row(i)) {
                *h += x * wt;
            }
        }
        ht.iter_mut().for_each(|h| *h = h.max(0.0));
        let mut he = w.be.clone();
        for &b in ehr {
            for (h, &we) in he.iter_mut().zip(w.we.row(b)) {
                *h += we;
            }
        }
        he.iter_mut().for_each(|h| *h = h.max(0.0));
        let logits = (0..w.wo.rows)
            .map(|k| {
                let row = w.wo.row(k);
                let (rt, re) = row.split_at(ht.len());
                w.bo[k] + dot(rt, &ht) + dot(re, &he)
            })
            .collect();
        Activations { ht, he, logits }
    }

    /// Adds one row's gradient into `grads`; returns the row's loss.
    fn accumulate(&self, row: &ConditionRow, grads: &mut NetworkGradients) -> f64 {
        let a = self.forward(&row.text, &row.ehr_buckets);
        let w = &self.weights;
        let nt = a.ht.len();
        let mut dht = vec![0.0; nt];
        let mut dhe = vec![0.0; a.he.len()];
        let mut loss = 0.0;
        for (k, &z) in a.logits.iter().enumerate() {
            let y = if row.is_target(self.output_buckets[k]) { 1.0 } else { 0.0 };
            loss += bce_with_logit(z, y);
            let dz = sigmoid(z) - y;
            grads.bo[k] += dz;
            let (gt, ge) = grads.wo.row_mut(k).split_at_mut(nt);
            let (wt, we) = w.wo.row(k).split_at(nt);
            for j in 0..nt {
                gt[j] += dz * a.ht[j];
                dht[j] += dz * wt[j];
            }
            for j in 0..a.he.len() {
                ge[j] += dz * a.he[j];
                dhe[j] += dz * we[j];
            }
        }
        for j in 0..nt {
            if a.ht[j] <= 0.0 {
                dht[j] = 0.0;
            }
            grads.bt[j] += dht[j];
        }
        for j in 0..dhe.len() {
            if a.he[j] <= 0.0 {
                dhe[j] = 0.0;
            }
            grads.be[j] += dhe[j];
        }
        for (i, x) in row.text.iter() {
            for (g, d) in grads.wt.row_mut(i).iter_mut().zip(&dht) {
                *g += x * d;
            }
        }
        for &b in &row.ehr_buckets {
            for (g, d) in grads.we.row_mut(b).iter_mut().zip(&dhe) {
                *g += d;
            }
        }
        loss
    }

    /// Summed loss over `rows` and its gradient.
    pub fn loss_and_gradients(&self, rows: &[ConditionRow]) -> (f64, NetworkGradients) {
        let mut grads = self.weights.zeros_like();
        let loss = rows.iter().map(|r| self.accumulate(r, &mut grads)).sum();
        (loss, grads)
    }

    pub fn loss(&self, rows: &[ConditionRow]) -> f64 {
        rows.iter()
            .map(|r| {
                let a = self.forward(&r.text, &r.ehr_buckets);
                a.logits
                    .iter()
                    .enumerate()
                    .map(|(k, &z)| bce_with_logit(z, if r.is_target(self.output_buckets[k]) { 1.0 } else { 0.0 }))
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn mean_loss(&self, rows: &[ConditionRow]) -> f64 {
        self.loss(rows) / rows.len().max(1) as f64
    }

    /// Pre-sigmoid outputs, one per output bucket.
    pub fn logits(&self, row: &ConditionRow) -> Vec<f64> {
        self.forward(&row.text, &row.ehr_buckets).logits
    }

    /// `(bucket index, probability)` for every output bucket.
    pub fn bucket_scores(&self, row: &ConditionRow) -> Vec<(usize, f64)> {
        self.logits(row).into_iter().zip(&self.output_buckets).map(|(z, &b)| (b, sigmoid(z))).collect()
    }

    /// Output unit of a bucket index.
    pub fn output_of(&self, bucket: usize) -> Option<usize> {
        self.output_buckets.iter().position(|&b| b == bucket)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn zero(g: &mut NetworkGradients) {
    for s in g.slices_mut() {
        s.iter_mut().for_each(|x| *x = 0.0);
    }
}

/// Cross-entropy of `sigmoid(z)` against `y`, computed stably.
fn bce_with_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::TfidfConfig;

    fn toy(seed: u64) -> (ConditionNetwork, Vec<ConditionRow>) {
        let texts = ["edema legs", "cough fever", "edema cough", "pain chest", "fever chills", "pain legs"];
        let vocab = TfidfVocabulary::fit(&texts, TfidfConfig { min_df: 1 }).unwrap();
        let cfg = NetworkConfig { hidden_text: 6, hidden_ehr: 4, seed, ..NetworkConfig::default() };
        let buckets: Vec<String> = (0..5).map(|i| format!("b{i}")).collect();
        let net = ConditionNetwork::init(cfg, vocab.clone(), buckets, (0..5).collect(), None);
        let rows = texts
            .iter()
            .enumerate()
            .map(|(i, t)| ConditionRow {
                text: vocab.encode(t),
                ehr_buckets: vec![i % 5, (i + 2) % 5].into_iter().collect::<std::collections::BTreeSet<_>>().into_iter().collect(),
                delays: Default::default(),
                targets: vec![i % 3, 4].into_iter().collect::<std::collections::BTreeSet<_>>().into_iter().collect(),
            })
            .collect();
        (net, rows)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (net, rows) = toy(3);
        let (_, grads) = net.loss_and_gradients(&rows);
        let analytic = grads.flatten();
        let theta = net.weights.flatten();
        let h = 1e-6;
        let mut probe = net.clone();
        let mut worst: f64 = 0.0;
        for i in 0..theta.len() {
            let mut t = theta.clone();
            t[i] += h;
            probe.weights.set_flat(&t);
            let up = probe.loss(&rows);
            t[i] -= 2.0 * h;
            probe.weights.set_flat(&t);
            let down = probe.loss(&rows);
            let numeric = (up - down) / (2.0 * h);
            let scale = analytic[i].abs().max(numeric.abs());
            let err = if scale > 1e-6 { (analytic[i] - numeric).abs() / scale } else { (analytic[i] - numeric).abs() };
            worst = worst.max(err);
        }
        assert!(worst < 1e-4, "worst relative gradient error {worst}");
    }

    #[test]
    fn zero_epochs_keep_initialization() {
        let (net, rows) = toy(1);
        let mut trained = net.clone();
        trained.config.epochs = 0;
        trained.fit(&rows).unwrap();
        assert_eq!(trained.weights, net.weights);
        assert_eq!(trained.logits(&rows[0]), net.logits(&rows[0]));
    }

    #[test]
    fn training_reduces_loss() {
        let (mut net, rows) = toy(2);
        let before = net.mean_loss(&rows);
        net.config.epochs = 200;
        net.config.batch_size = 2;
        net.fit(&rows).unwrap();
        let after = net.final_loss.unwrap();
        assert!(after < before, "{after} !< {before}");
    }

    #[test]
    fn zero_input_ranking_follows_output_biases() {
        let (mut net, _) = toy(4);
        net.weights.bt.iter_mut().for_each(|b| *b = 0.0);
        net.weights.be.iter_mut().for_each(|b| *b = 0.0);
        net.weights.bo = vec![0.1, 0.5, -1.0, 2.0, 0.0];
        let row = ConditionRow { text: SparseVector::default(), ehr_buckets: vec![], delays: Default::default(), targets: vec![] };
        let scores = net.bucket_scores(&row);
        let order = crate::ranking::bucket_order(&scores);
        assert_eq!(order, vec![3, 1, 0, 4, 2]);
    }

    #[test]
    fn serde_round_trip() {
        let (net, rows) = toy(5);
        let json = serde_json::to_string(&net).unwrap();
        assert!(json.contains("\"shape\""));
        let back: ConditionNetwork = serde_json::from_str(&json).unwrap();
        assert_eq!(back.logits(&rows[1]), net.logits(&rows[1]));
    }
}
