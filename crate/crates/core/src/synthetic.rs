//! Seeded synthetic datasets with known class-distinguishing metrics.
//!
//! Every metric starts as i.i.d. Gaussian noise around 0. Each signal adds a
//! shape to one metric for samples of one class: a constant level shift, a
//! linear ramp, or periodic spikes with a per-sample random phase. Labels are
//! assigned round-robin, so classes are balanced within one sample.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::sample::{MetricSchema, MultivariateSample};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Signal {
    /// Adds `amount` at every timestep.
    LevelShift { amount: f64 },
    /// Adds a ramp rising from 0 to `slope` over the series.
    Trend { slope: f64 },
    /// Adds `amplitude` every `period` steps.
    PeriodicSpikes { period: usize, amplitude: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalRecipe {
    pub metric: usize,
    pub class: String,
    pub signal: Signal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub num_metrics: usize,
    pub length: usize,
    pub classes: Vec<String>,
    pub signals: Vec<SignalRecipe>,
    pub noise_scale: f64,
    pub num_samples: usize,
    pub seed: u64,
    /// Prefix for generated sample ids.
    #[serde(default = "default_prefix")]
    pub id_prefix: String,
}

fn default_prefix() -> String {
    "s".to_string()
}

/// Ground truth accompanying a generated dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// Indices of metrics carrying any signal, ascending.
    pub signal_metrics: Vec<usize>,
    pub signal_metric_names: Vec<String>,
    pub recipe: Vec<SignalRecipe>,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_metrics == 0 || self.length == 0 {
            return fail("num_metrics and length must be positive".into());
        }
        if self.num_samples == 0 {
            return fail("num_samples must be positive".into());
        }
        if self.classes.len() < 2 {
            return fail("at least two classes are required".into());
        }
        let distinct: BTreeSet<&String> = self.classes.iter().collect();
        if distinct.len() != self.classes.len() || self.classes.iter().any(String::is_empty) {
            return fail("class names must be distinct and non-empty".into());
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return fail(format!("noise_scale must be finite and >= 0, got {}", self.noise_scale));
        }
        for r in &self.signals {
            if r.metric >= self.num_metrics {
                return fail(format!("signal metric {} out of range for {} metrics", r.metric, self.num_metrics));
            }
            if !self.classes.contains(&r.class) {
                return fail(format!("signal refers to unknown class {:?}", r.class));
            }
            let finite = match r.signal {
                Signal::LevelShift { amount } => amount.is_finite(),
                Signal::Trend { slope } => slope.is_finite(),
                Signal::PeriodicSpikes { period, amplitude } => {
                    if period == 0 {
                        return fail("spike period must be positive".into());
                    }
                    amplitude.is_finite()
                }
            };
            if !finite {
                return fail("signal parameters must be finite".into());
            }
        }
        Ok(())
    }

    pub fn metric_names(&self) -> Vec<String> {
        let width = (self.num_metrics - 1).max(1).to_string().len();
        (0..self.num_metrics).map(|j| format!("m{j:0width$}")).collect()
    }
}

/// Generates the dataset described by `spec`. Identical specs give identical
/// datasets.
pub fn generate(spec: &GeneratorSpec) -> Result<(Dataset, Manifest)> {
    spec.validate()?;
    let names = spec.metric_names();
    let schema = Arc::new(MetricSchema::new(names.clone(), spec.length)?);
    let (m, t) = (spec.num_metrics, spec.length);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_scale).expect("validated noise scale");
    let width = (spec.num_samples - 1).max(1).to_string().len();

    let mut samples = Vec::with_capacity(spec.num_samples);
    for i in 0..spec.num_samples {
        let class = &spec.classes[i % spec.classes.len()];
        let mut values: Vec<f64> = (0..m * t).map(|_| noise.sample(&mut rng)).collect();
        for r in spec.signals.iter().filter(|r| &r.class == class) {
            let row = &mut values[r.metric * t..(r.metric + 1) * t];
            match r.signal {
                Signal::LevelShift { amount } => row.iter_mut().for_each(|v| *v += amount),
                Signal::Trend { slope } => {
                    let denom = (t - 1).max(1) as f64;
                    for (k, v) in row.iter_mut().enumerate() {
                        *v += slope * k as f64 / denom;
                    }
                }
                Signal::PeriodicSpikes { period, amplitude } => {
                    let phase = rng.gen_range(0..period);
                    for v in row.iter_mut().skip(phase).step_by(period) {
                        *v += amplitude;
                    }
                }
            }
        }
        let id = format!("{}{i:0width$}", spec.id_prefix);
        samples.push(MultivariateSample::new(schema.clone(), id, Some(class.clone()), values)?);
    }

    let signal_metrics: Vec<usize> = spec
        .signals
        .iter()
        .map(|r| r.metric)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let manifest = Manifest {
        signal_metric_names: signal_metrics.iter().map(|&j| names[j].clone()).collect(),
        signal_metrics,
        recipe: spec.signals.clone(),
        seed: spec.seed,
    };
    Ok((Dataset::new(samples)?, manifest))
}
