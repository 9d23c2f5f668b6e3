use serde::{Deserialize, Serialize};

use super::matching::Match;
use crate::stats::{mean, population_sd};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl DetectionMetrics {
    /// Precision and recall are 1 when their denominator is 0; F1 is 0 when
    /// both are 0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        DetectionMetrics { tp, fp, fn_, precision, recall, f1 }
    }
}

/// Counts from a one-to-one matching of `m` true and `n` predicted waves.
pub fn detection_metrics(matches: &[Match], m: usize, n: usize) -> DetectionMetrics {
    let tp = matches.len();
    DetectionMetrics::from_counts(tp, n - tp, m - tp)
}

/// Signed onset/offset errors in milliseconds, one per matched pair.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DelineationErrors {
    pub onset_ms: Vec<f64>,
    pub offset_ms: Vec<f64>,
}

/// `(mean, population SD)`; NaN for no values.
fn summary(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        (mean(xs), population_sd(xs))
    }
}

impl DelineationErrors {
    pub fn onset_summary(&self) -> (f64, f64) {
        summary(&self.onset_ms)
    }

    pub fn offset_summary(&self) -> (f64, f64) {
        summary(&self.offset_ms)
    }

    pub fn len(&self) -> usize {
        self.onset_ms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.onset_ms.is_empty()
    }
}

/// Which difference is reported as the error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorSign {
    /// Positive means the prediction is late.
    #[default]
    PredMinusTrue,
    TrueMinusPred,
}

impl ErrorSign {
    pub fn factor(self) -> f64 {
        match self {
            ErrorSign::PredMinusTrue => 1.0,
            ErrorSign::TrueMinusPred => -1.0,
        }
    }
}

pub fn delineation_errors(matches: &[Match], sampling_rate: f64, sign: ErrorSign) -> DelineationErrors {
    let k = sign.factor() * 1000.0 / sampling_rate;
    DelineationErrors {
        onset_ms: matches.iter().map(|m| m.onset_error as f64 * k).collect(),
        offset_ms: matches.iter().map(|m| m.offset_error as f64 * k).collect(),
    }
}
