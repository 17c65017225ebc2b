//! Counterfactual explanations as handed to users.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::SubstitutionMask;
use crate::normalize::NormalizationParams;
use crate::sample::MultivariateSample;

/// One substituted metric with both series, in original units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubstitutedMetric {
    pub metric: String,
    pub test_values: Vec<f64>,
    pub distractor_values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub test_sample_id: String,
    pub distractor_id: String,
    pub target_class: String,
    pub achieved_probability: f64,
    pub mask: SubstitutionMask,
    pub substituted_metrics: Vec<SubstitutedMetric>,
}

impl Explanation {
    /// Records the substitution of `mask` from `x_dist` into `x_test`.
    /// When `normalization` is given, the series are inverted back to
    /// original units.
    pub fn new(
        x_test: &MultivariateSample,
        x_dist: &MultivariateSample,
        target_class: impl Into<String>,
        mask: SubstitutionMask,
        achieved_probability: f64,
        normalization: Option<&NormalizationParams>,
    ) -> Result<Self> {
        x_test.ensure_same_schema(x_dist)?;
        if mask.len() != x_test.num_metrics() {
            return Err(Error::SchemaMismatch {
                dimension: "mask length",
                expected: x_test.num_metrics().to_string(),
                got: mask.len().to_string(),
            });
        }
        let restore = |metric: usize, series: &[f64]| match normalization {
            Some(params) => params.invert_series(metric, series),
            None => series.to_vec(),
        };
        let substituted_metrics = mask
            .indices()
            .map(|j| SubstitutedMetric {
                metric: x_test.schema().name(j).to_string(),
                test_values: restore(j, x_test.row(j)),
                distractor_values: restore(j, x_dist.row(j)),
            })
            .collect();
        Ok(Self {
            test_sample_id: x_test.sample_id().to_string(),
            distractor_id: x_dist.sample_id().to_string(),
            target_class: target_class.into(),
            achieved_probability,
            mask,
            substituted_metrics,
        })
    }

    pub fn metric_names(&self) -> impl Iterator<Item = &str> {
        self.substituted_metrics.iter().map(|s| s.metric.as_str())
    }

    /// Number of substituted time series.
    pub fn size(&self) -> usize {
        self.mask.cardinality()
    }

    /// Per-metric `(timestep, test value, distractor value)` rows as CSV with
    /// header `metric,timestep,test_value,distractor_value`.
    pub fn plot_csv(&self) -> String {
        let mut out = String::from("metric,timestep,test_value,distractor_value\n");
        for s in &self.substituted_metrics {
            for (t, (a, b)) in s.test_values.iter().zip(&s.distractor_values).enumerate() {
                out.push_str(&format!("{},{t},{a:?},{b:?}\n", csv_field(&s.metric)));
            }
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
