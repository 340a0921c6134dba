use serde::{Deserialize, Serialize};

use crate::ranking::dataset::ConditionRow;
use crate::ranking::network::ConditionNetwork;
use crate::ranking::RankingError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoConfig {
    /// Penalty as a fraction of the smallest penalty that zeroes every weight.
    pub lambda_ratio: f64,
    pub max_sweeps: usize,
    /// Stop once no weight moves by more than this in a sweep.
    pub tolerance: f64,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self { lambda_ratio: 0.05, max_sweeps: 500, tolerance: 1e-7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeWeight {
    pub feature: String,
    pub weight: f64,
}

/// Sparse design matrix stored by column.
struct Columns {
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
}

/// L1-penalized least squares with an unpenalized intercept, by cyclic
/// coordinate descent on columns scaled to unit root mean square.
///
/// Minimizes `1/(2n)·‖y − b − Xw‖² + λ‖w‖₁` in the scaled space and returns
/// `(scaled weights, intercept)`. All-zero columns keep a zero weight.
fn lasso_fit(x: &Columns, y: &[f64], config: LassoConfig) -> (Vec<f64>, f64) {
    let n = x.n as f64;
    let scale: Vec<f64> =
        x.cols.iter().map(|c| (c.iter().map(|(_, v)| v * v).sum::<f64>() / n).sqrt()).collect();
    let mean_y = y.iter().sum::<f64>() / n;
    let mut r: Vec<f64> = y.iter().map(|v| v - mean_y).collect();
    let mut b = mean_y;

    // Gradient of the scaled problem at w = 0 picks λ_max.
    let lambda_max = x
        .cols
        .iter()
        .zip(&scale)
        .filter(|(_, &s)| s > 0.0)
        .map(|(c, s)| c.iter().map(|&(i, v)| v / s * r[i]).sum::<f64>().abs() / n)
        .fold(0.0, f64::max);
    let lambda = config.lambda_ratio * lambda_max;

    let mut w = vec![0.0; x.cols.len()];
    for _ in 0..config.max_sweeps {
        let mut moved: f64 = 0.0;
        for (j, col) in x.cols.iter().enumerate() {
            let s = scale[j];
            if s == 0.0 {
                continue;
            }
            // Scaled column has mean square exactly 1.
            let rho = col.iter().map(|&(i, v)| v / s * r[i]).sum::<f64>() / n + w[j];
            let next = soft_threshold(rho, lambda);
            let delta = next - w[j];
            if delta != 0.0 {
                for &(i, v) in col {
                    r[i] -= delta * v / s;
                }
                w[j] = next;
                moved = moved.max(delta.abs());
            }
        }
        let shift = r.iter().sum::<f64>() / n;
        b += shift;
        r.iter_mut().for_each(|v| *v -= shift);
        if moved < config.tolerance && shift.abs() < config.tolerance {
            break;
        }
    }
    (w, b)
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Lasso on dense rows; returns scaled weights and the intercept.
pub fn lasso(rows: &[Vec<f64>], y: &[f64], config: LassoConfig) -> (Vec<f64>, f64) {
    let d = rows.first().map_or(0, Vec::len);
    let mut cols = vec![Vec::new(); d];
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                cols[j].push((i, v));
            }
        }
    }
    lasso_fit(&Columns { n: rows.len(), cols }, y, config)
}

/// Sparse linear surrogate of one output logit of the network, over text
/// terms and prior-record buckets. Nonzero weights, largest magnitude first;
/// weights refer to unit-scaled features so magnitudes are comparable.
pub fn linear_probe(
    network: &ConditionNetwork,
    bucket: usize,
    rows: &[ConditionRow],
    config: LassoConfig,
) -> Result<Vec<ProbeWeight>, RankingError> {
    let k = network.output_of(bucket).ok_or(RankingError::UnknownBucket(bucket))?;
    if rows.is_empty() {
        return Err(RankingError::EmptyDataset);
    }
    let y: Vec<f64> = rows.iter().map(|r| network.logits(r)[k]).collect();
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi - lo < 1e-12 {
        return Err(RankingError::DegenerateProbe);
    }
    let v = network.vocab.len();
    let mut cols = vec![Vec::new(); v + network.input_buckets.len()];
    for (i, row) in rows.iter().enumerate() {
        for (j, x) in row.text.iter() {
            cols[j].push((i, x));
        }
        for &b in &row.ehr_buckets {
            cols[v + b].push((i, 1.0));
        }
    }
    let (w, _) = lasso_fit(&Columns { n: rows.len(), cols }, &y, config);
    let mut out: Vec<ProbeWeight> = w
        .iter()
        .enumerate()
        .filter(|(_, &x)| x != 0.0)
        .map(|(j, &weight)| ProbeWeight {
            feature: if j < v { network.vocab.term(j).to_string() } else { format!("ehr:{}", network.input_buckets[j - v]) },
            weight,
        })
        .collect();
    out.sort_by(|a, b| b.weight.abs().total_cmp(&a.weight.abs()).then_with(|| a.feature.cmp(&b.feature)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn recovers_sparse_linear_teacher() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth = [2.0, 0.0, -1.5, 0.0, 0.0, 0.0, 1.0, 0.0];
        let rows: Vec<Vec<f64>> =
            (0..400).map(|_| (0..truth.len()).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 0.3 + r.iter().zip(&truth).map(|(a, b)| a * b).sum::<f64>() + rng.random_range(-0.05..0.05))
            .collect();
        let (w, b) = lasso(&rows, &y, LassoConfig { lambda_ratio: 0.01, ..LassoConfig::default() });
        // Scaled weights: uniform(-1,1) has root mean square 1/√3.
        let scale: Vec<f64> = (0..truth.len())
            .map(|j| (rows.iter().map(|r| r[j] * r[j]).sum::<f64>() / rows.len() as f64).sqrt())
            .collect();
        let unscaled: Vec<f64> = w.iter().zip(&scale).map(|(a, s)| a / s).collect();
        let dot: f64 = unscaled.iter().zip(&truth).map(|(a, b)| a * b).sum();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(dot / (norm(&unscaled) * norm(&truth)) > 0.95);
        assert!((b - 0.3).abs() < 0.1);
    }

    #[test]
    fn full_penalty_keeps_nothing() {
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let y = vec![1.0, 2.0, 3.0];
        let (w, b) = lasso(&rows, &y, LassoConfig { lambda_ratio: 1.0, ..LassoConfig::default() });
        assert!(w.iter().all(|&x| x == 0.0));
        assert!((b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn soft_threshold_shrinks_toward_zero() {
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
    }
}
