use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::features::{FeatureError, TriageVitals};

/// A categorizable vital. Blood pressure combines systolic and diastolic.
/// The declaration order is the tie-break order for [`most_abnormal_vital`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VitalKind {
    Temperature,
    HeartRate,
    RespRate,
    Spo2,
    BloodPressure,
    Age,
}

impl VitalKind {
    pub const ALL: [VitalKind; 6] = [
        VitalKind::Temperature,
        VitalKind::HeartRate,
        VitalKind::RespRate,
        VitalKind::Spo2,
        VitalKind::BloodPressure,
        VitalKind::Age,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VitalKind::Temperature => "temperature",
            VitalKind::HeartRate => "heart_rate",
            VitalKind::RespRate => "resp_rate",
            VitalKind::Spo2 => "spo2",
            VitalKind::BloodPressure => "blood_pressure",
            VitalKind::Age => "age",
        }
    }

    /// Labels this vital can take, in cutoff order.
    pub fn labels(self) -> &'static [VitalBucket] {
        use VitalBucket::*;
        match self {
            VitalKind::Temperature | VitalKind::RespRate => &[Low, Normal, High],
            VitalKind::Spo2 => &[Low, Normal],
            VitalKind::HeartRate => &[Bradycardic, Normal, Tachycardic],
            VitalKind::BloodPressure => &[Normal, Elevated, Stage1Hypertension, Stage2Hypertension],
            VitalKind::Age => &[Child, Age18To33, Age34To48, Age48To64, Age64To77, Age78Plus],
        }
    }

    pub fn bucketize(self, value: VitalValue) -> Result<VitalBucket, FeatureError> {
        use VitalBucket::*;
        let check = |v: f64| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(FeatureError::InvalidVital { name: self.as_str().to_string(), value: v })
            }
        };
        let scalar = match (self, value) {
            (VitalKind::BloodPressure, VitalValue::Pressure { systolic, diastolic }) => {
                let (s, d) = (check(systolic)?, check(diastolic)?);
                return Ok(if s < 120.0 && d < 80.0 {
                    Normal
                } else if d < 80.0 && s < 130.0 {
                    Elevated
                } else if s < 140.0 && d < 90.0 {
                    Stage1Hypertension
                } else {
                    Stage2Hypertension
                });
            }
            (VitalKind::BloodPressure, VitalValue::Scalar(_)) => return Err(FeatureError::IncompletePressure),
            (_, VitalValue::Scalar(v)) => check(v)?,
            (_, VitalValue::Pressure { .. }) => {
                return Err(FeatureError::InvalidVital { name: self.as_str().to_string(), value: f64::NAN })
            }
        };
        let v = scalar;
        Ok(match self {
            VitalKind::Temperature => three_way(v, 97.0, 100.4, Low, High),
            VitalKind::RespRate => three_way(v, 12.0, 20.0, Low, High),
            VitalKind::HeartRate => three_way(v, 60.0, 100.0, Bradycardic, Tachycardic),
            VitalKind::Spo2 => {
                if v < 95.0 {
                    Low
                } else {
                    Normal
                }
            }
            VitalKind::Age => {
                if v < 18.0 {
                    Child
                } else if v < 34.0 {
                    Age18To33
                } else if v < 48.0 {
                    Age34To48
                } else if v < 64.0 {
                    Age48To64
                } else if v < 78.0 {
                    Age64To77
                } else {
                    Age78Plus
                }
            }
            VitalKind::BloodPressure => unreachable!("handled above"),
        })
    }
}

/// `< low` → below, `> high` → above, otherwise NORMAL.
fn three_way(v: f64, low: f64, high: f64, below: VitalBucket, above: VitalBucket) -> VitalBucket {
    if v > high {
        above
    } else if v < low {
        below
    } else {
        VitalBucket::Normal
    }
}

impl fmt::Display for VitalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VitalKind {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VitalKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| FeatureError::UnknownVital(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VitalValue {
    Scalar(f64),
    Pressure { systolic: f64, diastolic: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VitalBucket {
    #[serde(rename = "NORMAL")]
    Normal,
    #[serde(rename = "HIGH")]
    High,
    #[serde(rename = "LOW")]
    Low,
    #[serde(rename = "TACHYCARDIC")]
    Tachycardic,
    #[serde(rename = "BRADYCARDIC")]
    Bradycardic,
    #[serde(rename = "ELEVATED")]
    Elevated,
    #[serde(rename = "STAGE_1_HYPERTENSION")]
    Stage1Hypertension,
    #[serde(rename = "STAGE_2_HYPERTENSION")]
    Stage2Hypertension,
    #[serde(rename = "CHILD")]
    Child,
    #[serde(rename = "18-33")]
    Age18To33,
    #[serde(rename = "34-48")]
    Age34To48,
    #[serde(rename = "48-64")]
    Age48To64,
    #[serde(rename = "64-77")]
    Age64To77,
    #[serde(rename = "78+")]
    Age78Plus,
}

impl VitalBucket {
    pub fn as_str(self) -> &'static str {
        match self {
            VitalBucket::Normal => "NORMAL",
            VitalBucket::High => "HIGH",
            VitalBucket::Low => "LOW",
            VitalBucket::Tachycardic => "TACHYCARDIC",
            VitalBucket::Bradycardic => "BRADYCARDIC",
            VitalBucket::Elevated => "ELEVATED",
            VitalBucket::Stage1Hypertension => "STAGE_1_HYPERTENSION",
            VitalBucket::Stage2Hypertension => "STAGE_2_HYPERTENSION",
            VitalBucket::Child => "CHILD",
            VitalBucket::Age18To33 => "18-33",
            VitalBucket::Age34To48 => "34-48",
            VitalBucket::Age48To64 => "48-64",
            VitalBucket::Age64To77 => "64-77",
            VitalBucket::Age78Plus => "78+",
        }
    }
}

impl fmt::Display for VitalBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Categorizes a vital by name. Names are those of [`VitalKind::as_str`].
pub fn bucketize_vital(name: &str, value: VitalValue) -> Result<VitalBucket, FeatureError> {
    name.parse::<VitalKind>()?.bucketize(value)
}

impl TriageVitals {
    /// The value of one vital, if every component is present.
    pub fn get(&self, kind: VitalKind) -> Option<VitalValue> {
        match kind {
            VitalKind::Temperature => self.temperature_f.map(VitalValue::Scalar),
            VitalKind::HeartRate => self.heart_rate_bpm.map(VitalValue::Scalar),
            VitalKind::RespRate => self.resp_rate_bpm.map(VitalValue::Scalar),
            VitalKind::Spo2 => self.spo2_pct.map(VitalValue::Scalar),
            VitalKind::Age => self.age_years.map(VitalValue::Scalar),
            VitalKind::BloodPressure => match (self.systolic_mmhg, self.diastolic_mmhg) {
                (Some(systolic), Some(diastolic)) => Some(VitalValue::Pressure { systolic, diastolic }),
                _ => None,
            },
        }
    }

    /// Bucket label of every present vital, in [`VitalKind::ALL`] order.
    pub fn buckets(&self) -> Vec<(VitalKind, VitalBucket)> {
        VitalKind::ALL
            .into_iter()
            .filter_map(|k| self.get(k).and_then(|v| k.bucketize(v).ok()).map(|b| (k, b)))
            .collect()
    }
}

/// Per-measurement sorted samples from a training population.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PopulationStats {
    pub temperature: Vec<f64>,
    pub heart_rate: Vec<f64>,
    pub resp_rate: Vec<f64>,
    pub spo2: Vec<f64>,
    pub systolic: Vec<f64>,
    pub diastolic: Vec<f64>,
    pub age: Vec<f64>,
}

impl PopulationStats {
    /// Collects the present finite values of every measurement and sorts them.
    pub fn fit<'a>(vitals: impl IntoIterator<Item = &'a TriageVitals>) -> Self {
        let mut s = Self::default();
        for v in vitals {
            let cols: [(&mut Vec<f64>, Option<f64>); 7] = [
                (&mut s.temperature, v.temperature_f),
                (&mut s.heart_rate, v.heart_rate_bpm),
                (&mut s.resp_rate, v.resp_rate_bpm),
                (&mut s.spo2, v.spo2_pct),
                (&mut s.systolic, v.systolic_mmhg),
                (&mut s.diastolic, v.diastolic_mmhg),
                (&mut s.age, v.age_years),
            ];
            for (col, x) in cols {
                if let Some(x) = x.filter(|x| x.is_finite()) {
                    col.push(x);
                }
            }
        }
        for col in s.columns_mut() {
            col.sort_by(f64::total_cmp);
        }
        s
    }

    fn columns_mut(&mut self) -> [&mut Vec<f64>; 7] {
        [
            &mut self.temperature,
            &mut self.heart_rate,
            &mut self.resp_rate,
            &mut self.spo2,
            &mut self.systolic,
            &mut self.diastolic,
            &mut self.age,
        ]
    }

    /// Midrank empirical CDF: `(#below + #equal / 2) / n`. `None` when the
    /// sample is empty.
    pub fn percentile(sorted: &[f64], x: f64) -> Option<f64> {
        if sorted.is_empty() {
            return None;
        }
        let below = sorted.partition_point(|&s| s < x);
        let up_to = sorted.partition_point(|&s| s <= x);
        Some((below as f64 + 0.5 * (up_to - below) as f64) / sorted.len() as f64)
    }

    /// `|percentile − 0.5|`; for blood pressure the larger of the two
    /// components. `None` if the value or its population is missing.
    pub fn abnormality(&self, kind: VitalKind, value: VitalValue) -> Option<f64> {
        let dev = |col: &[f64], x: f64| Self::percentile(col, x).map(|p| (p - 0.5).abs());
        match (kind, value) {
            (VitalKind::BloodPressure, VitalValue::Pressure { systolic, diastolic }) => {
                Some(dev(&self.systolic, systolic)?.max(dev(&self.diastolic, diastolic)?))
            }
            (VitalKind::Temperature, VitalValue::Scalar(x)) => dev(&self.temperature, x),
            (VitalKind::HeartRate, VitalValue::Scalar(x)) => dev(&self.heart_rate, x),
            (VitalKind::RespRate, VitalValue::Scalar(x)) => dev(&self.resp_rate, x),
            (VitalKind::Spo2, VitalValue::Scalar(x)) => dev(&self.spo2, x),
            (VitalKind::Age, VitalValue::Scalar(x)) => dev(&self.age, x),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AbnormalVital {
    /// No vital was present.
    None,
    Vital { vital: VitalKind, bucket: VitalBucket, abnormality: f64 },
}

impl AbnormalVital {
    /// Categorical key such as `heart_rate:TACHYCARDIC`, or `NONE`.
    pub fn key(&self) -> String {
        match self {
            AbnormalVital::None => "NONE".to_string(),
            AbnormalVital::Vital { vital, bucket, .. } => format!("{vital}:{bucket}"),
        }
    }
}

/// The present vital whose value lies furthest from the population median,
/// with its bucket label. Ties go to the earliest vital in [`VitalKind::ALL`].
pub fn most_abnormal_vital(vitals: &TriageVitals, stats: &PopulationStats) -> AbnormalVital {
    let mut best = AbnormalVital::None;
    let mut best_score = f64::NEG_INFINITY;
    for kind in VitalKind::ALL {
        let Some(value) = vitals.get(kind) else { continue };
        let Some(score) = stats.abnormality(kind, value) else { continue };
        let Ok(bucket) = kind.bucketize(value) else { continue };
        if score > best_score {
            best_score = score;
            best = AbnormalVital::Vital { vital: kind, bucket, abnormality: score };
        }
    }
    best
}
