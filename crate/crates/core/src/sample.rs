//! Metric schemas and multivariate time-series samples.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered metric names plus the number of timesteps per series.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MetricSchema {
    names: Vec<String>,
    length: usize,
}

impl MetricSchema {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>, length: usize) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::InvalidSchema("at least one metric is required".into()));
        }
        if length == 0 {
            return Err(Error::InvalidSchema("series length must be positive".into()));
        }
        let mut seen = HashSet::with_capacity(names.len());
        for name in &names {
            if name.is_empty() {
                return Err(Error::InvalidSchema("metric names must be non-empty".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate metric name {name:?}")));
            }
        }
        Ok(Self { names, length })
    }

    /// Number of metrics, `m`.
    pub fn num_metrics(&self) -> usize {
        self.names.len()
    }

    /// Samples per series, `t`.
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, metric: usize) -> &str {
        &self.names[metric]
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub(crate) fn ensure_same(&self, other: &MetricSchema) -> Result<()> {
        if self.names.len() != other.names.len() {
            return Err(Error::SchemaMismatch {
                dimension: "metric count",
                expected: self.names.len().to_string(),
                got: other.names.len().to_string(),
            });
        }
        if self.length != other.length {
            return Err(Error::SchemaMismatch {
                dimension: "series length",
                expected: self.length.to_string(),
                got: other.length.to_string(),
            });
        }
        if let Some(j) = (0..self.names.len()).find(|&j| self.names[j] != other.names[j]) {
            return Err(Error::SchemaMismatch {
                dimension: "metric names",
                expected: self.names[j].clone(),
                got: other.names[j].clone(),
            });
        }
        Ok(())
    }
}

/// An `m × t` matrix of finite values, one row per metric.
///
/// Values are stored row-major, so [`values`](Self::values) is the
/// metric-major flattening used for distances.
#[derive(Clone, Debug, PartialEq)]
pub struct MultivariateSample {
    schema: Arc<MetricSchema>,
    values: Vec<f64>,
    sample_id: String,
    label: Option<String>,
}

impl MultivariateSample {
    pub fn new(
        schema: Arc<MetricSchema>,
        sample_id: impl Into<String>,
        label: Option<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let sample_id = sample_id.into();
        let expected = schema.num_metrics() * schema.length();
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "sample values",
                expected,
                got: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                sample_id,
                metric: schema.name(pos / schema.length()).to_string(),
                timestep: pos % schema.length(),
            });
        }
        Ok(Self {
            schema,
            values,
            sample_id,
            label,
        })
    }

    /// Builds a sample from one row per metric.
    pub fn from_rows(
        schema: Arc<MetricSchema>,
        sample_id: impl Into<String>,
        label: Option<String>,
        rows: &[Vec<f64>],
    ) -> Result<Self> {
        if rows.len() != schema.num_metrics() {
            return Err(Error::DimensionMismatch {
                what: "metric rows",
                expected: schema.num_metrics(),
                got: rows.len(),
            });
        }
        let mut values = Vec::with_capacity(schema.num_metrics() * schema.length());
        for row in rows {
            if row.len() != schema.length() {
                return Err(Error::DimensionMismatch {
                    what: "series length",
                    expected: schema.length(),
                    got: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(schema, sample_id, label, values)
    }

    pub fn schema(&self) -> &Arc<MetricSchema> {
        &self.schema
    }

    pub fn sample_id(&self) -> &str {
        &self.sample_id
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn num_metrics(&self) -> usize {
        self.schema.num_metrics()
    }

    pub fn length(&self) -> usize {
        self.schema.length()
    }

    pub fn row(&self, metric: usize) -> &[f64] {
        let t = self.schema.length();
        &self.values[metric * t..(metric + 1) * t]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.schema.length())
    }

    /// Metric-major flattening of the matrix.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn with_id(mut self, sample_id: impl Into<String>) -> Self {
        self.sample_id = sample_id.into();
        self
    }

    pub fn with_label(mut self, label: Option<String>) -> Self {
        self.label = label;
        self
    }

    /// Euclidean distance between the flattened matrices.
    pub fn distance(&self, other: &MultivariateSample) -> f64 {
        squared_distance(&self.values, &other.values).sqrt()
    }

    pub(crate) fn ensure_same_schema(&self, other: &MultivariateSample) -> Result<()> {
        if Arc::ptr_eq(&self.schema, &other.schema) {
            return Ok(());
        }
        self.schema.ensure_same(&other.schema)
    }

    pub(crate) fn map_values(&self, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        let t = self.schema.length();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(i / t, v))
            .collect();
        Self {
            schema: self.schema.clone(),
            values,
            sample_id: self.sample_id.clone(),
            label: self.label.clone(),
        }
    }

    pub(crate) fn from_parts_unchecked(
        schema: Arc<MetricSchema>,
        sample_id: String,
        label: Option<String>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(values.len(), schema.num_metrics() * schema.length());
        Self {
            schema,
            values,
            sample_id,
            label,
        }
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_rejects_bad_names() {
        assert!(MetricSchema::new(Vec::<String>::new(), 3).is_err());
        assert!(MetricSchema::new(["a", ""], 3).is_err());
        assert!(MetricSchema::new(["a", "a"], 3).is_err());
        assert!(MetricSchema::new(["a"], 0).is_err());
        assert!(MetricSchema::new(["a", "b"], 1).is_ok());
    }

    #[test]
    fn sample_rejects_non_finite() {
        let schema = Arc::new(MetricSchema::new(["a", "b"], 2).unwrap());
        let err = MultivariateSample::new(schema.clone(), "s", None, vec![0.0, 1.0, f64::NAN, 2.0])
            .unwrap_err();
        match err {
            Error::NonFinite { metric, timestep, .. } => {
                assert_eq!(metric, "b");
                assert_eq!(timestep, 0);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(MultivariateSample::new(schema, "s", None, vec![0.0; 3]).is_err());
    }

    #[test]
    fn schema_mismatch_names_the_dimension() {
        let a = MetricSchema::new(["a", "b"], 2).unwrap();
        let b = MetricSchema::new(["a", "b"], 3).unwrap();
        let c = MetricSchema::new(["a", "c"], 2).unwrap();
        assert!(matches!(
            a.ensure_same(&b),
            Err(Error::SchemaMismatch { dimension: "series length", .. })
        ));
        assert!(matches!(
            a.ensure_same(&c),
            Err(Error::SchemaMismatch { dimension: "metric names", .. })
        ));
    }
}
