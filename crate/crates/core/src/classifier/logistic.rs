//! Bias-free binary logistic regression over extracted features, with an
//! L1-regularized proximal gradient trainer.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::features::{extract_features, feature_values, FeatureVector, NUM_FEATURES};
use super::Classifier;
use crate::error::{Error, Result};
use crate::probability::ClassProbabilities;
use crate::sample::MultivariateSample;

/// `y = S(w·φ(x))` where `φ` is [`extract_features`]. The second class name
/// is the positive class whose probability is `y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    class_names: Arc<[String]>,
    weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    feature_names: Vec<String>,
}

impl LogisticModel {
    pub fn new(weights: Vec<f64>, class_names: [String; 2]) -> Result<Self> {
        if weights.is_empty() || weights.len() % NUM_FEATURES != 0 {
            return Err(Error::DimensionMismatch {
                what: "logistic weights (multiple of 11)",
                expected: NUM_FEATURES * weights.len().div_ceil(NUM_FEATURES).max(1),
                got: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
            return Err(Error::InvalidConfig(format!("non-finite weight {w}")));
        }
        if class_names[0] == class_names[1] {
            return Err(Error::InvalidConfig("class names must differ".into()));
        }
        Ok(Self {
            class_names: Vec::from(class_names).into(),
            weights,
            feature_names: Vec::new(),
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Self {
        self.feature_names = names;
        self
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn positive_class(&self) -> &str {
        &self.class_names[1]
    }

    /// Indices of features with a nonzero weight.
    pub fn nonzero_features(&self) -> Vec<usize> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Metrics with at least one nonzero-weight feature.
    pub fn used_metrics(&self) -> BTreeSet<usize> {
        self.nonzero_features()
            .into_iter()
            .map(|i| i / NUM_FEATURES)
            .collect()
    }

    pub fn num_metrics(&self) -> usize {
        self.weights.len() / NUM_FEATURES
    }

    /// `w·φ(x)`.
    pub fn decision_value(&self, x: &MultivariateSample) -> Result<f64> {
        let expected = NUM_FEATURES * x.num_metrics();
        if expected != self.weights.len() {
            return Err(Error::DimensionMismatch {
                what: "logistic feature dimension",
                expected: self.weights.len(),
                got: expected,
            });
        }
        Ok(dot(&self.weights, &feature_values(x)))
    }
}

impl Classifier for LogisticModel {
    fn class_names(&self) -> &[String] {
        &self.class_names
    }

    fn predict(&self, x: &MultivariateSample) -> Result<ClassProbabilities> {
        let y = sigmoid(self.decision_value(x)?);
        ClassProbabilities::new(self.class_names.clone(), vec![1.0 - y, y])
    }
}

/// Full-batch ISTA: a gradient step on the mean logistic loss followed by
/// soft-thresholding at `learning_rate · l1`, starting from zero weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticTrainer {
    pub l1: f64,
    pub steps: usize,
    pub learning_rate: f64,
}

impl Default for LogisticTrainer {
    fn default() -> Self {
        Self {
            l1: 0.01,
            steps: 2000,
            learning_rate: 0.5,
        }
    }
}

impl LogisticTrainer {
    /// `labels[i]` is true for the positive class, `class_names[1]`.
    pub fn fit(
        &self,
        features: &[FeatureVector],
        labels: &[bool],
        class_names: [String; 2],
    ) -> Result<LogisticModel> {
        if !(self.l1 >= 0.0) || !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "need l1 >= 0 and learning_rate > 0, got {} and {}",
                self.l1, self.learning_rate
            )));
        }
        if features.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                what: "labels",
                expected: features.len(),
                got: labels.len(),
            });
        }
        if labels.iter().all(|&l| l) {
            return Err(Error::SingleClass(class_names[1].clone()));
        }
        if labels.iter().all(|&l| !l) {
            return Err(Error::SingleClass(class_names[0].clone()));
        }
        let dim = features[0].len();
        if let Some(f) = features.iter().find(|f| f.len() != dim) {
            return Err(Error::DimensionMismatch {
                what: "feature vectors",
                expected: dim,
                got: f.len(),
            });
        }

        let n = features.len() as f64;
        let threshold = self.learning_rate * self.l1;
        let mut w = vec![0.0; dim];
        let mut grad = vec![0.0; dim];
        for _ in 0..self.steps {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for (x, &label) in features.iter().zip(labels) {
                let residual = sigmoid(dot(&w, &x.values)) - if label { 1.0 } else { 0.0 };
                for (g, &xi) in grad.iter_mut().zip(&x.values) {
                    *g += residual * xi;
                }
            }
            for (wi, g) in w.iter_mut().zip(&grad) {
                *wi = soft_threshold(*wi - self.learning_rate * g / n, threshold);
            }
        }
        Ok(LogisticModel::new(w, class_names)?.with_feature_names(features[0].feature_names.clone()))
    }

    /// Extracts features and fits with `positive_class` as the positive label.
    /// The negative class is the other label present in `samples`.
    pub fn fit_samples(&self, samples: &[MultivariateSample], positive_class: &str) -> Result<LogisticModel> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut labels = Vec::with_capacity(samples.len());
        let mut negative: Option<&str> = None;
        for s in samples {
            let label = s
                .label()
                .ok_or_else(|| Error::InvalidConfig(format!("sample {} has no label", s.sample_id())))?;
            if label == positive_class {
                labels.push(true);
            } else {
                match negative {
                    None => negative = Some(label),
                    Some(n) if n != label => {
                        return Err(Error::InvalidConfig(format!(
                            "binary logistic regression got a third class {label:?}"
                        )))
                    }
                    _ => {}
                }
                labels.push(false);
            }
        }
        let negative = negative.ok_or_else(|| Error::SingleClass(positive_class.to_string()))?;
        let features: Vec<FeatureVector> = samples.iter().map(extract_features).collect();
        self.fit(&features, &labels, [negative.to_string(), positive_class.to_string()])
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn soft_threshold(v: f64, threshold: f64) -> f64 {
    if v > threshold {
        v - threshold
    } else if v < -threshold {
        v + threshold
    } else {
        0.0
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
