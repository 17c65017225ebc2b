//! Per-metric statistical feature extraction.
//!
//! Each metric contributes eleven features, in this order: minimum, maximum,
//! mean, population standard deviation, Fisher-Pearson skewness, excess
//! kurtosis, and the 5th/25th/50th/75th/95th percentiles. Percentiles
//! interpolate linearly between order statistics (position `q·(t−1)`).
//! Skewness and kurtosis are 0 for a zero-variance series.

use serde::{Deserialize, Serialize};

use crate::sample::MultivariateSample;

pub const NUM_FEATURES: usize = 11;

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "min", "max", "mean", "std", "skew", "kurtosis", "p5", "p25", "p50", "p75", "p95",
];

const PERCENTILES: [f64; 5] = [0.05, 0.25, 0.50, 0.75, 0.95];

/// Flat feature vector, metric-major then feature index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub feature_names: Vec<String>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn extract_features(x: &MultivariateSample) -> FeatureVector {
    let mut values = Vec::with_capacity(NUM_FEATURES * x.num_metrics());
    let mut sorted = Vec::with_capacity(x.length());
    for row in x.rows() {
        series_features(row, &mut sorted, &mut values);
    }
    let feature_names = x
        .schema()
        .names()
        .iter()
        .flat_map(|metric| FEATURE_NAMES.iter().map(move |f| format!("{metric}::{f}")))
        .collect();
    FeatureVector {
        values,
        feature_names,
    }
}

/// Feature values only, without allocating names.
pub(crate) fn feature_values(x: &MultivariateSample) -> Vec<f64> {
    let mut values = Vec::with_capacity(NUM_FEATURES * x.num_metrics());
    let mut sorted = Vec::with_capacity(x.length());
    for row in x.rows() {
        series_features(row, &mut sorted, &mut values);
    }
    values
}

fn series_features(series: &[f64], sorted: &mut Vec<f64>, out: &mut Vec<f64>) {
    sorted.clear();
    sorted.extend_from_slice(series);
    sorted.sort_by(f64::total_cmp);
    let min = sorted[0];
    let max = sorted[sorted.len() - 1];

    if min == max {
        out.extend_from_slice(&[min, max, min, 0.0, 0.0, 0.0]);
        out.extend(std::iter::repeat(min).take(PERCENTILES.len()));
        return;
    }

    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in series {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let (skew, kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };
    out.extend_from_slice(&[min, max, mean, m2.sqrt(), skew, kurtosis]);
    out.extend(PERCENTILES.iter().map(|&q| percentile_sorted(sorted, q)));
}

fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}
