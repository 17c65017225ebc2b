//! Per-metric min/max normalization fitted on the training set.
//!
//! The same parameters are applied to test data without clamping, so values
//! outside the training range map outside `[0, 1]`. A metric that is constant
//! across the training set maps every value to 0, and inverts to its stored
//! constant.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{MetricSchema, MultivariateSample};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRange {
    pub metric: String,
    pub min: f64,
    pub max: f64,
}

impl MetricRange {
    fn is_degenerate(&self) -> bool {
        self.max == self.min
    }

    pub fn apply(&self, v: f64) -> f64 {
        if self.is_degenerate() {
            0.0
        } else {
            (v - self.min) / (self.max - self.min)
        }
    }

    pub fn invert(&self, v: f64) -> f64 {
        if self.is_degenerate() {
            self.min
        } else {
            v * (self.max - self.min) + self.min
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub metrics: Vec<MetricRange>,
}

impl NormalizationParams {
    pub fn fit(training: &[MultivariateSample]) -> Result<Self> {
        let first = training.first().ok_or(Error::EmptyDataset)?;
        let schema = first.schema();
        let mut ranges: Vec<(f64, f64)> = vec![(f64::INFINITY, f64::NEG_INFINITY); schema.num_metrics()];
        for s in training {
            first.ensure_same_schema(s)?;
            for (range, row) in ranges.iter_mut().zip(s.rows()) {
                for &v in row {
                    range.0 = range.0.min(v);
                    range.1 = range.1.max(v);
                }
            }
        }
        Ok(Self {
            metrics: schema
                .names()
                .iter()
                .zip(ranges)
                .map(|(name, (min, max))| MetricRange {
                    metric: name.clone(),
                    min,
                    max,
                })
                .collect(),
        })
    }

    pub fn apply(&self, sample: &MultivariateSample) -> Result<MultivariateSample> {
        self.check(sample.schema())?;
        Ok(sample.map_values(|metric, v| self.metrics[metric].apply(v)))
    }

    pub fn invert(&self, sample: &MultivariateSample) -> Result<MultivariateSample> {
        self.check(sample.schema())?;
        Ok(sample.map_values(|metric, v| self.metrics[metric].invert(v)))
    }

    pub fn apply_all(&self, samples: &[MultivariateSample]) -> Result<Vec<MultivariateSample>> {
        samples.iter().map(|s| self.apply(s)).collect()
    }

    /// Inverts a single series of `metric`.
    pub fn invert_series(&self, metric: usize, series: &[f64]) -> Vec<f64> {
        series.iter().map(|&v| self.metrics[metric].invert(v)).collect()
    }

    fn check(&self, schema: &Arc<MetricSchema>) -> Result<()> {
        if self.metrics.len() != schema.num_metrics() {
            return Err(Error::SchemaMismatch {
                dimension: "metric count",
                expected: self.metrics.len().to_string(),
                got: schema.num_metrics().to_string(),
            });
        }
        for (range, name) in self.metrics.iter().zip(schema.names()) {
            if &range.metric != name {
                return Err(Error::SchemaMismatch {
                    dimension: "metric names",
                    expected: range.metric.clone(),
                    got: name.clone(),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn sample(schema: &Arc<MetricSchema>, id: &str, values: Vec<f64>) -> MultivariateSample {
        MultivariateSample::new(schema.clone(), id, None, values).unwrap()
    }

    #[test]
    fn affine_map_without_clamping() {
        let schema = Arc::new(MetricSchema::new(["a", "c"], 2).unwrap());
        let training = vec![
            sample(&schema, "s1", vec![2.0, 3.0, 7.0, 7.0]),
            sample(&schema, "s2", vec![6.0, 4.0, 7.0, 7.0]),
        ];
        let params = NormalizationParams::fit(&training).unwrap();
        assert_eq!(params.metrics[0].apply(4.0), 0.5);
        assert_eq!(params.metrics[0].apply(8.0), 1.5);
        let test = sample(&schema, "t", vec![4.0, 8.0, 7.0, 9.0]);
        let normalized = params.apply(&test).unwrap();
        assert_eq!(normalized.values(), &[0.5, 1.5, 0.0, 0.0]);
        // The constant metric inverts to its stored value.
        assert_eq!(params.invert(&normalized).unwrap().row(1), &[7.0, 7.0]);
    }

    #[test]
    fn unit_range_is_identity() {
        let range = MetricRange {
            metric: "a".into(),
            min: 0.0,
            max: 1.0,
        };
        for v in [0.0, 0.25, 0.5, 1.0, 3.0] {
            assert_eq!(range.apply(v), v);
        }
    }

    #[test]
    fn rejects_schema_mismatch_and_empty_input() {
        assert!(matches!(NormalizationParams::fit(&[]), Err(Error::EmptyDataset)));
        let schema = Arc::new(MetricSchema::new(["a"], 1).unwrap());
        let params = NormalizationParams::fit(&[sample(&schema, "s", vec![1.0])]).unwrap();
        let other = Arc::new(MetricSchema::new(["b"], 1).unwrap());
        assert!(params.apply(&sample(&other, "t", vec![1.0])).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(
            rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 4), 2..6),
            probe in 0.0f64..=1.0,
        ) {
            let schema = Arc::new(MetricSchema::new(["x"], 4).unwrap());
            let training: Vec<_> = rows.iter().enumerate()
                .map(|(i, r)| sample(&schema, &format!("s{i}"), r.clone()))
                .collect();
            let params = NormalizationParams::fit(&training).unwrap();
            let range = &params.metrics[0];
            prop_assume!(range.max > range.min);
            let v = range.min + probe * (range.max - range.min);
            prop_assert!((range.invert(range.apply(v)) - v).abs() < 1e-9);
            for s in &training {
                let back = params.invert(&params.apply(s).unwrap()).unwrap();
                for (a, b) in back.values().iter().zip(s.values()) {
                    prop_assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }
}
