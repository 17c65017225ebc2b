//! Per-class nearest-neighbor retrieval of distractor candidates.
//!
//! Only correctly classified training samples are indexed: a sample enters
//! the index of class `c` iff its label is `c` and the reference classifier's
//! argmax is `c`. Samples are expected in normalized units.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::kdtree::KdTree;
use crate::probability::ClassProbabilities;
use crate::sample::{MetricSchema, MultivariateSample};

/// A neighbor returned by a query, with its Euclidean distance.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborRef<'a> {
    pub sample: &'a MultivariateSample,
    pub distance: f64,
}

/// Samples behind a KD-tree over their metric-major flattening.
#[derive(Debug)]
pub struct SampleIndex {
    samples: Vec<MultivariateSample>,
    tree: KdTree,
}

impl SampleIndex {
    pub fn new(samples: Vec<MultivariateSample>) -> Self {
        let dim = samples
            .first()
            .map(|s| s.values().len())
            .unwrap_or(1);
        let mut points = Vec::with_capacity(dim * samples.len());
        let mut keys = Vec::with_capacity(samples.len());
        for s in &samples {
            points.extend_from_slice(s.values());
            keys.push(s.sample_id().to_string());
        }
        let tree = KdTree::new(dim, points, keys);
        Self { samples, tree }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[MultivariateSample] {
        &self.samples
    }

    /// Up to `n` samples nearest to `query`, ties broken by sample id.
    pub fn nearest(&self, query: &MultivariateSample, n: usize) -> Result<Vec<NeighborRef<'_>>> {
        Ok(self
            .nearest_positions(query, n)?
            .into_iter()
            .map(|(pos, distance)| NeighborRef {
                sample: &self.samples[pos],
                distance,
            })
            .collect())
    }

    fn nearest_positions(&self, query: &MultivariateSample, n: usize) -> Result<Vec<(usize, f64)>> {
        let Some(first) = self.samples.first() else {
            return Ok(Vec::new());
        };
        first.ensure_same_schema(query)?;
        Ok(self
            .tree
            .nearest(query.values(), n)
            .into_iter()
            .map(|nb| (nb.index, nb.distance()))
            .collect())
    }
}

/// Correctly classified training samples of one class.
#[derive(Debug)]
pub struct ClassIndex {
    class_name: String,
    index: SampleIndex,
    probabilities: Vec<ClassProbabilities>,
}

/// A distractor candidate together with the reference classifier's output.
#[derive(Clone, Debug)]
pub struct Candidate<'a> {
    pub sample: &'a MultivariateSample,
    pub probabilities: &'a ClassProbabilities,
    pub distance: f64,
}

impl ClassIndex {
    pub fn class_name(&self) -> &str {
        &self.class_name
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn samples(&self) -> &[MultivariateSample] {
        self.index.samples()
    }

    /// Ids of the `min(n, len)` nearest members, nearest first.
    pub fn nearest_distractors(&self, x_test: &MultivariateSample, n: usize) -> Result<Vec<String>> {
        Ok(self
            .nearest_candidates(x_test, n)?
            .into_iter()
            .map(|c| c.sample.sample_id().to_string())
            .collect())
    }

    pub fn nearest_candidates(&self, x_test: &MultivariateSample, n: usize) -> Result<Vec<Candidate<'_>>> {
        if n == 0 {
            return Err(Error::InvalidConfig("number of distractors must be >= 1".into()));
        }
        if self.is_empty() {
            return Err(Error::NoDistractor {
                class: self.class_name.clone(),
            });
        }
        Ok(self
            .index
            .nearest_positions(x_test, n)?
            .into_iter()
            .map(|(pos, distance)| self.candidate(pos, distance))
            .collect())
    }

    /// The `n` nearest members satisfying `accept`, nearest first.
    pub fn nearest_candidates_where(
        &self,
        x_test: &MultivariateSample,
        n: usize,
        mut accept: impl FnMut(&Candidate<'_>) -> bool,
    ) -> Result<Vec<Candidate<'_>>> {
        if n == 0 {
            return Err(Error::InvalidConfig("number of distractors must be >= 1".into()));
        }
        let mut k = n;
        loop {
            let found: Vec<Candidate<'_>> = self
                .index
                .nearest_positions(x_test, k)?
                .into_iter()
                .map(|(pos, distance)| self.candidate(pos, distance))
                .filter(|c| accept(c))
                .take(n)
                .collect();
            if found.len() == n || k >= self.len() {
                return Ok(found);
            }
            k = (k * 2).min(self.len());
        }
    }

    fn candidate(&self, pos: usize, distance: f64) -> Candidate<'_> {
        Candidate {
            sample: &self.index.samples[pos],
            probabilities: &self.probabilities[pos],
            distance,
        }
    }
}

/// One [`ClassIndex`] per class of the reference classifier.
#[derive(Debug)]
pub struct DistractorIndex {
    schema: Arc<MetricSchema>,
    classes: BTreeMap<String, ClassIndex>,
}

impl DistractorIndex {
    pub fn build(training: &[MultivariateSample], f: &dyn Classifier) -> Result<Self> {
        Self::build_with_prefilter(training, f, |_, members| members)
    }

    /// Like [`build`](Self::build), but lets the caller reduce each class's
    /// correctly classified members (random sampling, clustering, ...) before
    /// the spatial index is constructed.
    pub fn build_with_prefilter<'a>(
        training: &'a [MultivariateSample],
        f: &dyn Classifier,
        mut prefilter: impl FnMut(&str, Vec<&'a MultivariateSample>) -> Vec<&'a MultivariateSample>,
    ) -> Result<Self> {
        let first = training.first().ok_or(Error::EmptyDataset)?;
        let schema = first.schema().clone();
        let mut members: BTreeMap<String, Vec<(&MultivariateSample, ClassProbabilities)>> = f
            .class_names()
            .iter()
            .map(|c| (c.clone(), Vec::new()))
            .collect();
        for s in training {
            first.ensure_same_schema(s)?;
            let label = s.label().ok_or_else(|| {
                Error::InvalidConfig(format!("training sample {} has no label", s.sample_id()))
            })?;
            let probabilities = f.predict(s)?;
            if probabilities.predicted_class() == label {
                if let Some(list) = members.get_mut(label) {
                    list.push((s, probabilities));
                }
            }
        }
        let mut classes = BTreeMap::new();
        for (class, list) in members {
            let refs: Vec<&MultivariateSample> = list.iter().map(|(s, _)| *s).collect();
            let kept = prefilter(&class, refs);
            let mut samples = Vec::with_capacity(kept.len());
            let mut probabilities = Vec::with_capacity(kept.len());
            for s in kept {
                let p = list
                    .iter()
                    .find(|(member, _)| std::ptr::eq(*member, s))
                    .map(|(_, p)| p.clone())
                    .ok_or_else(|| {
                        Error::InvalidConfig(format!(
                            "prefilter returned {} which is not a correctly classified member of {class:?}",
                            s.sample_id()
                        ))
                    })?;
                samples.push(s.clone());
                probabilities.push(p);
            }
            classes.insert(
                class.clone(),
                ClassIndex {
                    class_name: class,
                    index: SampleIndex::new(samples),
                    probabilities,
                },
            );
        }
        Ok(Self { schema, classes })
    }

    pub fn schema(&self) -> &Arc<MetricSchema> {
        &self.schema
    }

    /// Index for `class`.
    pub fn class(&self, class: &str) -> Result<&ClassIndex> {
        self.classes
            .get(class)
            .ok_or_else(|| Error::UnknownClass(class.to_string()))
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassIndex> {
        self.classes.values()
    }

    pub fn find(&self, sample_id: &str) -> Option<&MultivariateSample> {
        self.classes
            .values()
            .flat_map(|c| c.samples())
            .find(|s| s.sample_id() == sample_id)
    }
}
