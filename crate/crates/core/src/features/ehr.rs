use serde::{Deserialize, Serialize};

use crate::features::{FeatureError, PatientContext};
use crate::ontology::Ontology;

/// Rate used for a bucket that never appears in a training history.
pub const DEFAULT_DELAY_RATE: f64 = 1.0 / 365.0;

/// `1[b ∈ H]` for every relevancy bucket, in bucket index order.
pub fn ehr_presence_vector(context: &PatientContext, ontology: &Ontology) -> Vec<f64> {
    let mut v = vec![0.0; ontology.bucket_count()];
    for m in &context.ehr {
        if let Some(e) = ontology.find(&m.entry) {
            v[ontology.bucket_index(e)] = 1.0;
        }
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayFeature {
    /// `1 − exp(−λ·d)` with `d` the most recent mention age; 0 when absent.
    pub value: f64,
    pub absent: bool,
}

/// Min mention age in days of any entry of `bucket`, if it is in history.
pub fn bucket_delay(context: &PatientContext, ontology: &Ontology, bucket: usize) -> Result<Option<f64>, FeatureError> {
    let mut best: Option<f64> = None;
    for m in &context.ehr {
        let Some(e) = ontology.find(&m.entry) else { continue };
        if ontology.bucket_index(e) != bucket {
            continue;
        }
        if !(m.age_days >= 0.0) {
            return Err(FeatureError::NegativeDelay(m.age_days));
        }
        best = Some(best.map_or(m.age_days, |b: f64| b.min(m.age_days)));
    }
    Ok(best)
}

pub fn delay_feature(
    context: &PatientContext,
    ontology: &Ontology,
    bucket: usize,
    lambda: f64,
) -> Result<DelayFeature, FeatureError> {
    Ok(match bucket_delay(context, ontology, bucket)? {
        Some(d) => DelayFeature { value: delay_transform(d, lambda)?, absent: false },
        None => DelayFeature { value: 0.0, absent: true },
    })
}

/// Exponential-CDF transform of a delay in days.
pub fn delay_transform(d: f64, lambda: f64) -> Result<f64, FeatureError> {
    if !(d >= 0.0) {
        return Err(FeatureError::NegativeDelay(d));
    }
    Ok(1.0 - (-lambda * d).exp())
}

/// `λ_b = 1 / mean(d)` over contexts whose history holds bucket `b`.
/// Buckets never observed, or only at delay 0, get [`DEFAULT_DELAY_RATE`].
pub fn fit_delay_rates<'a>(
    contexts: impl IntoIterator<Item = &'a PatientContext>,
    ontology: &Ontology,
) -> Result<Vec<f64>, FeatureError> {
    let b = ontology.bucket_count();
    let mut sum = vec![0.0; b];
    let mut n = vec![0usize; b];
    for ctx in contexts {
        for (bucket, d) in ctx.ehr_ages(ontology).into_iter().fold(
            std::collections::HashMap::<usize, f64>::new(),
            |mut acc, (e, d)| {
                let k = ontology.bucket_index(e);
                acc.entry(k).and_modify(|x| *x = x.min(d)).or_insert(d);
                acc
            },
        ) {
            if !(d >= 0.0) {
                return Err(FeatureError::NegativeDelay(d));
            }
            sum[bucket] += d;
            n[bucket] += 1;
        }
    }
    Ok((0..b)
        .map(|k| if n[k] > 0 && sum[k] > 0.0 { n[k] as f64 / sum[k] } else { DEFAULT_DELAY_RATE })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::EhrMention;

    fn ctx(ehr: &[(&str, f64)]) -> PatientContext {
        PatientContext {
            ehr: ehr.iter().map(|(e, d)| EhrMention { entry: e.to_string(), age_days: *d }).collect(),
            ..PatientContext::default()
        }
    }

    #[test]
    fn empty_history_is_zero() {
        let o = Ontology::demo();
        let v = ehr_presence_vector(&ctx(&[]), &o);
        assert_eq!(v.len(), o.bucket_count());
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn ldl_rolls_up_to_hyperlipidemia() {
        let o = Ontology::demo();
        let v = ehr_presence_vector(&ctx(&[("c_increased_ldl", 30.0)]), &o);
        let b = o.bucket_of("c_increased_ldl").unwrap();
        assert_eq!(b, o.bucket_of("c_hyperlipidemia").unwrap());
        assert_eq!(v[b], 1.0);
        assert_eq!(v.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn delay_closed_forms() {
        let o = Ontology::demo();
        let b = o.bucket_of("c_hypertension").unwrap();
        let f = delay_feature(&ctx(&[("c_hypertension", 10.0), ("c_hypertension", 40.0)]), &o, b, 0.1).unwrap();
        assert!(!f.absent);
        assert!((f.value - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        let f = delay_feature(&ctx(&[("c_hypertension", 0.0)]), &o, b, 0.1).unwrap();
        assert_eq!(f.value, 0.0);
        assert!(delay_transform(1e6, 0.1).unwrap() > 1.0 - 1e-12);
        let f = delay_feature(&ctx(&[("c_chf", 3.0)]), &o, b, 0.1).unwrap();
        assert_eq!(f, DelayFeature { value: 0.0, absent: true });
    }

    #[test]
    fn negative_delay_errors() {
        let o = Ontology::demo();
        let b = o.bucket_of("c_hypertension").unwrap();
        assert!(matches!(
            delay_feature(&ctx(&[("c_hypertension", -1.0)]), &o, b, 0.1),
            Err(FeatureError::NegativeDelay(_))
        ));
    }

    #[test]
    fn rates_are_inverse_mean_delay() {
        let o = Ontology::demo();
        let b = o.bucket_of("c_hypertension").unwrap();
        let cs = [ctx(&[("c_hypertension", 10.0)]), ctx(&[("c_hypertension", 30.0), ("c_hypertension", 90.0)])];
        let rates = fit_delay_rates(&cs, &o).unwrap();
        assert!((rates[b] - 1.0 / 20.0).abs() < 1e-12);
        assert_eq!(rates[o.bucket_of("c_chf").unwrap()], DEFAULT_DELAY_RATE);
    }
}
