//! Black-box classifier interface and the built-in pipelines.

mod features;
mod logistic;
mod setcover;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use features::{extract_features, FeatureVector, FEATURE_NAMES, NUM_FEATURES};
pub use logistic::{LogisticModel, LogisticTrainer};
pub use setcover::{hitting_set_bruteforce, SetCoverForest, MAX_BRUTEFORCE_UNIVERSE};

use crate::error::{Error, Result};
use crate::probability::ClassProbabilities;
use crate::sample::MultivariateSample;

/// A probability function `f: sample → k class probabilities`.
///
/// Implementations must be deterministic and keep `class_names` stable.
pub trait Classifier: Send + Sync {
    fn class_names(&self) -> &[String];

    fn predict(&self, sample: &MultivariateSample) -> Result<ClassProbabilities>;

    fn predict_batch(&self, samples: &[&MultivariateSample]) -> Result<Vec<ClassProbabilities>> {
        samples.iter().map(|s| self.predict(s)).collect()
    }

    /// Whether concurrent `predict` calls make progress in parallel. Handles
    /// returning `false` are still safe to share but serialize internally.
    fn supports_concurrency(&self) -> bool {
        true
    }

    fn class_index(&self, class: &str) -> Result<usize> {
        self.class_names()
            .iter()
            .position(|c| c == class)
            .ok_or_else(|| Error::UnknownClass(class.to_string()))
    }
}

impl<C: Classifier + ?Sized> Classifier for &C {
    fn class_names(&self) -> &[String] {
        (**self).class_names()
    }
    fn predict(&self, sample: &MultivariateSample) -> Result<ClassProbabilities> {
        (**self).predict(sample)
    }
    fn predict_batch(&self, samples: &[&MultivariateSample]) -> Result<Vec<ClassProbabilities>> {
        (**self).predict_batch(samples)
    }
    fn supports_concurrency(&self) -> bool {
        (**self).supports_concurrency()
    }
}

impl<C: Classifier + ?Sized> Classifier for Box<C> {
    fn class_names(&self) -> &[String] {
        (**self).class_names()
    }
    fn predict(&self, sample: &MultivariateSample) -> Result<ClassProbabilities> {
        (**self).predict(sample)
    }
    fn predict_batch(&self, samples: &[&MultivariateSample]) -> Result<Vec<ClassProbabilities>> {
        (**self).predict_batch(samples)
    }
    fn supports_concurrency(&self) -> bool {
        (**self).supports_concurrency()
    }
}

/// Adapts a closure returning raw probability rows. Rows are validated with
/// the built-in tolerance.
pub struct FnClassifier<F> {
    class_names: Arc<[String]>,
    f: F,
}

impl<F> FnClassifier<F>
where
    F: Fn(&MultivariateSample) -> Result<Vec<f64>> + Send + Sync,
{
    pub fn new(class_names: Arc<[String]>, f: F) -> Self {
        Self { class_names, f }
    }
}

impl<F> Classifier for FnClassifier<F>
where
    F: Fn(&MultivariateSample) -> Result<Vec<f64>> + Send + Sync,
{
    fn class_names(&self) -> &[String] {
        &self.class_names
    }

    fn predict(&self, sample: &MultivariateSample) -> Result<ClassProbabilities> {
        ClassProbabilities::new(self.class_names.clone(), (self.f)(sample)?)
    }
}

/// Wraps a classifier and counts `predict` calls (a batch counts each sample).
pub struct CountingClassifier<C> {
    inner: C,
    calls: AtomicUsize,
}

impl<C: Classifier> CountingClassifier<C> {
    pub fn new(inner: C) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }

    pub fn into_inner(self) -> C {
        self.inner
    }
}

impl<C: Classifier> Classifier for CountingClassifier<C> {
    fn class_names(&self) -> &[String] {
        self.inner.class_names()
    }

    fn predict(&self, sample: &MultivariateSample) -> Result<ClassProbabilities> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.predict(sample)
    }

    fn predict_batch(&self, samples: &[&MultivariateSample]) -> Result<Vec<ClassProbabilities>> {
        self.calls.fetch_add(samples.len(), Ordering::Relaxed);
        self.inner.predict_batch(samples)
    }

    fn supports_concurrency(&self) -> bool {
        self.inner.supports_concurrency()
    }
}

/// Serialized form of the built-in models, as read by `builtin:<model-file>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BuiltinModel {
    Logistic(LogisticModel),
    SetCover(SetCoverForest),
}

impl Classifier for BuiltinModel {
    fn class_names(&self) -> &[String] {
        match self {
            BuiltinModel::Logistic(m) => m.class_names(),
            BuiltinModel::SetCover(f) => f.class_names(),
        }
    }

    fn predict(&self, sample: &MultivariateSample) -> Result<ClassProbabilities> {
        match self {
            BuiltinModel::Logistic(m) => m.predict(sample),
            BuiltinModel::SetCover(f) => f.predict(sample),
        }
    }
}
