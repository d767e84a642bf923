//! Classification and regression metrics with an explicit undefined value.

use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    EmptyInput,
}

/// A metric value, or `Undefined` when its denominator is zero.
///
/// Serializes as a number or as the string `"-"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Defined(f64),
    Undefined,
}

impl Metric {
    pub fn value(self) -> Option<f64> {
        match self {
            Metric::Defined(v) => Some(v),
            Metric::Undefined => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, Metric::Defined(_))
    }

    pub fn or(self, fallback: f64) -> f64 {
        self.value().unwrap_or(fallback)
    }
}

impl From<Option<f64>> for Metric {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Metric::Undefined, Metric::Defined)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match (self, f.precision()) {
            (Metric::Undefined, _) => "-".to_string(),
            (Metric::Defined(v), Some(p)) => format!("{v:.p$}"),
            (Metric::Defined(v), None) => v.to_string(),
        };
        // not `pad`: it would read the precision as a truncation length
        let w = f.width().unwrap_or(0);
        match f.align() {
            Some(fmt::Alignment::Left) => write!(f, "{s:<w$}"),
            Some(fmt::Alignment::Center) => write!(f, "{s:^w$}"),
            _ => write!(f, "{s:>w$}"),
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Metric::Defined(v) => s.serialize_f64(*v),
            Metric::Undefined => s.serialize_str("-"),
        }
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Metric;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or \"-\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Metric, E> {
                Ok(Metric::Defined(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Metric, E> {
                Ok(Metric::Defined(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Metric, E> {
                Ok(Metric::Defined(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Metric, E> {
                if v == "-" {
                    Ok(Metric::Undefined)
                } else {
                    v.parse().map(Metric::Defined).map_err(E::custom)
                }
            }
        }
        d.deserialize_any(V)
    }
}

fn ratio(num: f64, den: f64) -> Metric {
    if den > 0.0 {
        Metric::Defined(num / den)
    } else {
        Metric::Undefined
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: Metric,
    pub recall: Metric,
    pub f1: Metric,
    pub auprc: Metric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub rmse: f64,
    pub pearson_r: Metric,
    pub r2: Metric,
}

fn check_lengths(a: usize, b: usize) -> Result<(), MetricsError> {
    if a != b {
        Err(MetricsError::LengthMismatch(a, b))
    } else if a == 0 {
        Err(MetricsError::EmptyInput)
    } else {
        Ok(())
    }
}

/// Harmonic mean of precision and recall; undefined unless both are defined
/// and sum to a positive value.
pub fn f1_score(precision: Metric, recall: Metric) -> Metric {
    match (precision, recall) {
        (Metric::Defined(p), Metric::Defined(r)) if p + r > 0.0 => Metric::Defined(2.0 * p * r / (p + r)),
        _ => Metric::Undefined,
    }
}

/// Average precision over the score ranking; tied scores enter together.
pub fn average_precision(labels: &[bool], scores: &[f64]) -> Result<Metric, MetricsError> {
    check_lengths(labels.len(), scores.len())?;
    let total_pos = labels.iter().filter(|&&l| l).count();
    if total_pos == 0 {
        return Ok(Metric::Undefined);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            tp += labels[order[i]] as usize;
            seen += 1;
            i += 1;
        }
        let recall = tp as f64 / total_pos as f64;
        ap += (recall - prev_recall) * (tp as f64 / seen as f64);
        prev_recall = recall;
    }
    Ok(Metric::Defined(ap))
}

pub fn classification_report(
    labels: &[bool],
    predictions: &[bool],
    scores: &[f64],
) -> Result<ClassificationReport, MetricsError> {
    check_lengths(labels.len(), predictions.len())?;
    check_lengths(labels.len(), scores.len())?;
    let (mut tp, mut fp, mut tn, mut fn_) = (0u64, 0u64, 0u64, 0u64);
    for (&l, &p) in labels.iter().zip(predictions) {
        match (l, p) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
            (true, false) => fn_ += 1,
        }
    }
    let precision = ratio(tp as f64, (tp + fp) as f64);
    let recall = ratio(tp as f64, (tp + fn_) as f64);
    Ok(ClassificationReport {
        tp,
        fp,
        tn,
        fn_,
        precision,
        recall,
        f1: f1_score(precision, recall),
        auprc: average_precision(labels, scores)?,
    })
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&x| x == v[0])
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<Metric, MetricsError> {
    check_lengths(a.len(), b.len())?;
    if a.len() < 2 || is_constant(a) || is_constant(b) {
        return Ok(Metric::Undefined);
    }
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    Ok(Metric::Defined((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)))
}

pub fn regression_report(targets: &[f64], predictions: &[f64]) -> Result<RegressionReport, MetricsError> {
    check_lengths(targets.len(), predictions.len())?;
    let n = targets.len() as f64;
    let ss_res: f64 = targets
        .iter()
        .zip(predictions)
        .map(|(&y, &p)| (y - p) * (y - p))
        .sum();
    let r2 = if targets.len() < 2 || is_constant(targets) {
        Metric::Undefined
    } else {
        let m = mean(targets);
        let ss_tot: f64 = targets.iter().map(|&y| (y - m) * (y - m)).sum();
        Metric::Defined(1.0 - ss_res / ss_tot)
    };
    Ok(RegressionReport {
        rmse: (ss_res / n).sqrt(),
        pearson_r: pearson(targets, predictions)?,
        r2,
    })
}
