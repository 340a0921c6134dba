use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Mean with a normal-approximation 95% interval half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// `1.96 · sd / √n` with the sample standard deviation; 0 when `n < 2`.
    pub ci95: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, ci95: f64::NAN, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Self { mean, ci95: 0.0, n };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self { mean, ci95: 1.96 * var.sqrt() / (n as f64).sqrt(), n }
    }
}

/// Mean of `a − b` over paired observations with a percentile bootstrap
/// interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedDifference {
    pub diff: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

/// Paired bootstrap of `mean(a) − mean(b)`: resamples pair indices with
/// replacement and takes the 2.5th and 97.5th percentiles.
///
/// Panics if the slices differ in length or are empty.
pub fn paired_bootstrap(a: &[f64], b: &[f64], resamples: usize, seed: u64) -> PairedDifference {
    assert_eq!(a.len(), b.len(), "paired samples differ in length");
    assert!(!a.is_empty(), "empty paired sample");
    let n = a.len();
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let diff = d.iter().sum::<f64>() / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| d[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let pick = |q: f64| {
        if means.is_empty() {
            return diff;
        }
        let i = ((q * (means.len() - 1) as f64).round() as usize).min(means.len() - 1);
        means[i]
    };
    PairedDifference { diff, lo: pick(0.025), hi: pick(0.975), n }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_closed_form() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((s.ci95 - 1.96 * sd / 2.0).abs() < 1e-12);
        assert_eq!(Summary::of(&[7.0]).ci95, 0.0);
        assert!(Summary::of(&[]).mean.is_nan());
    }

    #[test]
    fn bootstrap_brackets_mean_and_is_seeded() {
        let a: Vec<f64> = (0..200).map(|i| (i % 7) as f64 / 7.0).collect();
        let b: Vec<f64> = (0..200).map(|i| (i % 5) as f64 / 10.0).collect();
        let r = paired_bootstrap(&a, &b, 1000, 3);
        assert!(r.lo <= r.diff && r.diff <= r.hi);
        assert_eq!(r, paired_bootstrap(&a, &b, 1000, 3));
        let same = paired_bootstrap(&a, &a, 100, 1);
        assert_eq!((same.diff, same.lo, same.hi), (0.0, 0.0, 0.0));
    }
}
