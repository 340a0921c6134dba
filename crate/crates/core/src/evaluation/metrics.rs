use std::collections::HashSet;
use std::hash::Hash;

use crate::evaluation::EvalError;

fn truth_set<'a, T: Eq + Hash>(ranking: &[T], truth: &'a [T]) -> Result<HashSet<&'a T>, EvalError> {
    if truth.is_empty() {
        return Err(EvalError::EmptyTruth);
    }
    let set: HashSet<&T> = truth.iter().collect();
    let present = ranking.iter().filter(|r| set.contains(r)).collect::<HashSet<_>>().len();
    if present != set.len() {
        return Err(EvalError::MissingTruth { missing: set.len() - present });
    }
    Ok(set)
}

/// Shifted-rank MRR: `1/|T| · Σ_{R[i] ∈ T} 1/max(1, i − |T|)` over 1-indexed
/// positions `i`. Duplicate truth items count once.
pub fn mrr<T: Eq + Hash>(ranking: &[T], truth: &[T]) -> Result<f64, EvalError> {
    let set = truth_set(ranking, truth)?;
    let n = set.len();
    let sum: f64 = ranking
        .iter()
        .enumerate()
        .filter(|(_, r)| set.contains(r))
        .map(|(i, _)| 1.0 / ((i + 1).saturating_sub(n)).max(1) as f64)
        .sum();
    Ok(sum / n as f64)
}

/// Mean over the `|T|` relevant items of the precision at the rank where
/// each is hit.
pub fn map_score<T: Eq + Hash>(ranking: &[T], truth: &[T]) -> Result<f64, EvalError> {
    let set = truth_set(ranking, truth)?;
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, r) in ranking.iter().enumerate() {
        if set.contains(r) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(sum / set.len() as f64)
}

/// Reciprocal rank of the first relevant item.
pub fn reciprocal_rank<T: Eq + Hash>(ranking: &[T], truth: &[T]) -> Result<f64, EvalError> {
    let set = truth_set(ranking, truth)?;
    let first = ranking.iter().position(|r| set.contains(r)).expect("truth present in ranking");
    Ok(1.0 / (first + 1) as f64)
}
