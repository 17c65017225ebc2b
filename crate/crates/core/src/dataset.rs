//! Newline-delimited JSON datasets.
//!
//! Each line is one record:
//!
//! ```json
//! {"sample_id":"s1","label":"healthy","metrics":{"cpu":[0.1,0.2],"mem":[3.0,3.5]}}
//! ```
//!
//! The first record fixes the metric order and series length. Later records
//! may list their metrics in any order but must carry the same set.

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{MetricSchema, MultivariateSample};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    sample_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    metrics: IndexMap<String, Vec<f64>>,
}

/// Samples sharing one schema, with unique ids.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: Arc<MetricSchema>,
    samples: Vec<MultivariateSample>,
}

impl Dataset {
    pub fn new(samples: Vec<MultivariateSample>) -> Result<Self> {
        let schema = samples.first().ok_or(Error::EmptyDataset)?.schema().clone();
        let mut ids = HashSet::with_capacity(samples.len());
        for s in &samples {
            schema.ensure_same(s.schema())?;
            if !ids.insert(s.sample_id()) {
                return Err(Error::InvalidSchema(format!("duplicate sample_id {:?}", s.sample_id())));
            }
        }
        Ok(Self { schema, samples })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut schema: Option<Arc<MetricSchema>> = None;
        let mut samples = Vec::new();
        let mut ids = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let record: Record = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
            let schema = match &schema {
                Some(s) => s.clone(),
                None => {
                    let length = record.metrics.values().next().map_or(0, Vec::len);
                    let s = MetricSchema::new(record.metrics.keys().cloned(), length)
                        .map_err(|e| parse_err(e.to_string()))?;
                    schema.insert(Arc::new(s)).clone()
                }
            };
            if !ids.insert(record.sample_id.clone()) {
                return Err(parse_err(format!("duplicate sample_id {:?}", record.sample_id)));
            }
            if record.metrics.len() != schema.num_metrics() {
                return Err(parse_err(format!(
                    "sample {:?} has {} metrics, expected {}",
                    record.sample_id,
                    record.metrics.len(),
                    schema.num_metrics()
                )));
            }
            let mut values = Vec::with_capacity(schema.num_metrics() * schema.length());
            for name in schema.names() {
                let series = record.metrics.get(name).ok_or_else(|| {
                    parse_err(format!("sample {:?} is missing metric {name:?}", record.sample_id))
                })?;
                if series.len() != schema.length() {
                    return Err(parse_err(format!(
                        "sample {:?} metric {name:?} has length {}, expected {}",
                        record.sample_id,
                        series.len(),
                        schema.length()
                    )));
                }
                values.extend_from_slice(series);
            }
            let sample = MultivariateSample::new(schema, record.sample_id, record.label, values)
                .map_err(|e| parse_err(e.to_string()))?;
            samples.push(sample);
        }
        Self::new(samples)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for s in &self.samples {
            let record = Record {
                sample_id: s.sample_id().to_string(),
                label: s.label().map(str::to_string),
                metrics: self
                    .schema
                    .names()
                    .iter()
                    .enumerate()
                    .map(|(j, name)| (name.clone(), s.row(j).to_vec()))
                    .collect(),
            };
            out.push_str(&serde_json::to_string(&record).expect("records always serialize"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_ndjson())?;
        Ok(())
    }

    pub fn schema(&self) -> &Arc<MetricSchema> {
        &self.schema
    }

    pub fn samples(&self) -> &[MultivariateSample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<MultivariateSample> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn find(&self, sample_id: &str) -> Option<&MultivariateSample> {
        self.samples.iter().find(|s| s.sample_id() == sample_id)
    }

    /// Distinct labels in order of first appearance.
    pub fn labels(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for label in self.samples.iter().filter_map(|s| s.label()) {
            if !out.contains(&label) {
                out.push(label);
            }
        }
        out
    }
}
