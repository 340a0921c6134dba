use serde::{Deserialize, Serialize};

use crate::features::SparseVector;
use crate::ranking::RankingError;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrConfig {
    /// Penalty `l2/2·‖w‖²` added to the mean log loss; the bias is not penalized.
    pub l2: f64,
    pub iterations: usize,
}

impl Default for LrConfig {
    fn default() -> Self {
        Self { l2: 1e-3, iterations: 300 }
    }
}

/// Binary logistic regression over sparse rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryLr {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl BinaryLr {
    /// Accelerated full-batch gradient descent with step `1/L`, where `L`
    /// bounds the curvature of the objective.
    pub fn fit(rows: &[(&SparseVector, bool)], dim: usize, config: LrConfig) -> Result<Self, RankingError> {
        if rows.is_empty() {
            return Err(RankingError::EmptyDataset);
        }
        for (x, _) in rows {
            if let Some((i, _)) = x.iter().last() {
                if i >= dim {
                    return Err(RankingError::DimensionMismatch { expected: dim, got: i + 1 });
                }
            }
        }
        let n = rows.len() as f64;
        let max_sq = rows.iter().map(|(x, _)| x.norm().powi(2) + 1.0).fold(0.0, f64::max);
        let step = 1.0 / (0.25 * max_sq + config.l2);

        let mut w = vec![0.0; dim];
        let mut b = 0.0;
        let mut w_prev = w.clone();
        let mut y_w = w.clone();
        let mut y_b = b;
        let mut grad = vec![0.0; dim];
        for t in 0..config.iterations {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut grad_b = 0.0;
            for (x, label) in rows {
                let z = x.dot_dense(&y_w) + y_b;
                let r = (sigmoid(z) - if *label { 1.0 } else { 0.0 }) / n;
                for (i, v) in x.iter() {
                    grad[i] += r * v;
                }
                grad_b += r;
            }
            w_prev.copy_from_slice(&w);
            let b_prev = std::mem::replace(&mut b, y_b - step * grad_b);
            for i in 0..dim {
                w[i] = y_w[i] - step * (grad[i] + config.l2 * y_w[i]);
            }
            let momentum = t as f64 / (t as f64 + 3.0);
            for i in 0..dim {
                y_w[i] = w[i] + momentum * (w[i] - w_prev[i]);
            }
            y_b = b + momentum * (b - b_prev);
        }
        Ok(Self { weights: w, bias: b })
    }

    pub fn logit(&self, x: &SparseVector) -> f64 {
        x.dot_dense(&self.weights) + self.bias
    }

    pub fn predict(&self, x: &SparseVector) -> f64 {
        sigmoid(self.logit(x))
    }

    /// Mean log loss plus the L2 penalty.
    pub fn objective(&self, rows: &[(&SparseVector, bool)], l2: f64) -> f64 {
        let n = rows.len() as f64;
        let loss: f64 = rows
            .iter()
            .map(|(x, y)| {
                let p = self.predict(x).clamp(1e-15, 1.0 - 1e-15);
                if *y {
                    -p.ln()
                } else {
                    -(1.0 - p).ln()
                }
            })
            .sum::<f64>()
            / n;
        loss + 0.5 * l2 * self.weights.iter().map(|w| w * w).sum::<f64>()
    }
}
