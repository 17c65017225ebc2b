//! Evaluation measures for explanations: faithfulness, comprehensibility,
//! local Lipschitz robustness and generalizability.

use std::collections::BTreeSet;

use log::warn;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{Classifier, LogisticModel};
use crate::error::{Error, Result};
use crate::explanation::Explanation;
use crate::loss::combine;
use crate::mask::SubstitutionMask;
use crate::sample::{squared_distance, MultivariateSample};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaithfulnessReport {
    pub precision: f64,
    pub recall: f64,
    pub explanation_metrics: BTreeSet<String>,
    pub ground_truth_metrics: BTreeSet<String>,
}

/// Precision and recall of explanation metrics against a set of metrics the
/// model is known to use. An empty explanation has precision 1; an empty
/// ground truth has recall 1.
pub fn faithfulness_sets(
    explanation_metrics: BTreeSet<String>,
    ground_truth_metrics: BTreeSet<String>,
) -> FaithfulnessReport {
    let hits = explanation_metrics.intersection(&ground_truth_metrics).count() as f64;
    let ratio = |den: usize| if den == 0 { 1.0 } else { hits / den as f64 };
    FaithfulnessReport {
        precision: ratio(explanation_metrics.len()),
        recall: ratio(ground_truth_metrics.len()),
        explanation_metrics,
        ground_truth_metrics,
    }
}

/// Faithfulness against the metrics with at least one nonzero weight in
/// `model`, named through the model's `metric::feature` names.
pub fn faithfulness(explanation: &Explanation, model: &LogisticModel) -> Result<FaithfulnessReport> {
    let names = model.feature_names();
    if names.len() != model.weights().len() {
        return Err(Error::InvalidConfig(
            "the model has no feature names, so its metrics cannot be matched to the explanation".into(),
        ));
    }
    let used = model
        .nonzero_features()
        .into_iter()
        .map(|i| names[i].split("::").next().unwrap_or_default().to_string())
        .collect();
    Ok(faithfulness_sets(
        explanation.metric_names().map(str::to_string).collect(),
        used,
    ))
}

/// Number of time series in the explanation.
pub fn comprehensibility(explanation: &Explanation) -> usize {
    explanation.size()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborRatio {
    pub sample_id: String,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    /// Maximum ratio over the neighbors.
    pub lipschitz: f64,
    /// `lipschitz / √m`, a size-independent variant for comparing datasets.
    pub normalized_by_sqrt_m: f64,
    pub neighbor_count: usize,
    pub per_neighbor_ratios: Vec<NeighborRatio>,
}

/// Local Lipschitz constant of the explanation map around `x_test`:
/// the maximum over neighbors of `‖ξ(x_test) − ξ(x_j)‖₂ / ‖x_test − x_j‖₂`,
/// where `ξ` is the binary mask vector. Neighbors at distance 0 are skipped.
pub fn lipschitz_robustness<'a>(
    x_test: &MultivariateSample,
    mut explainer: impl FnMut(&MultivariateSample) -> Result<SubstitutionMask>,
    neighbors: impl IntoIterator<Item = &'a MultivariateSample>,
) -> Result<RobustnessReport> {
    let base = explainer(x_test)?;
    let mut per_neighbor_ratios = Vec::new();
    for neighbor in neighbors {
        x_test.ensure_same_schema(neighbor)?;
        let distance = squared_distance(x_test.values(), neighbor.values()).sqrt();
        if distance == 0.0 {
            continue;
        }
        let mask = explainer(neighbor)?;
        let numerator = (base.hamming(&mask) as f64).sqrt();
        per_neighbor_ratios.push(NeighborRatio {
            sample_id: neighbor.sample_id().to_string(),
            ratio: numerator / distance,
        });
    }
    if per_neighbor_ratios.is_empty() {
        return Err(Error::DegenerateNeighbors);
    }
    let lipschitz = per_neighbor_ratios.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(RobustnessReport {
        lipschitz,
        normalized_by_sqrt_m: lipschitz / (x_test.num_metrics() as f64).sqrt(),
        neighbor_count: per_neighbor_ratios.len(),
        per_neighbor_ratios,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizabilityReport {
    /// Fraction of the cohort whose argmax becomes the target class; 0 for an
    /// empty cohort.
    pub ratio: f64,
    pub flipped: usize,
    pub cohort_size: usize,
    /// Set when the cohort is empty and `ratio` carries no information.
    pub empty_cohort: bool,
}

/// Applies the explanation's (distractor, mask) pair to every cohort sample
/// and counts how many are then classified as `class`.
///
/// `find_distractor` resolves the explanation's distractor id.
pub fn generalizability<'a, 'b>(
    explanation: &Explanation,
    cohort: impl IntoIterator<Item = &'b MultivariateSample>,
    f: &dyn Classifier,
    class: &str,
    find_distractor: impl FnOnce(&str) -> Option<&'a MultivariateSample>,
) -> Result<GeneralizabilityReport> {
    let x_dist = find_distractor(&explanation.distractor_id)
        .ok_or_else(|| Error::MissingSample(explanation.distractor_id.clone()))?;
    let class_pos = f.class_index(class)?;
    let cohort: Vec<&MultivariateSample> = cohort.into_iter().collect();
    if cohort.is_empty() {
        warn!("generalizability requested for an empty cohort");
        return Ok(GeneralizabilityReport {
            ratio: 0.0,
            flipped: 0,
            cohort_size: 0,
            empty_cohort: true,
        });
    }
    let mut flipped = 0;
    for sample in &cohort {
        let x = combine(sample, x_dist, &explanation.mask)?;
        if f.predict(&x)?.argmax() == class_pos {
            flipped += 1;
        }
    }
    Ok(GeneralizabilityReport {
        ratio: flipped as f64 / cohort.len() as f64,
        flipped,
        cohort_size: cohort.len(),
        empty_cohort: false,
    })
}

/// Samples whose label is `true_class` and whose argmax prediction is
/// `predicted_class`.
pub fn cohort<'a>(
    samples: &'a [MultivariateSample],
    f: &dyn Classifier,
    true_class: &str,
    predicted_class: &str,
) -> Result<Vec<&'a MultivariateSample>> {
    let predicted_pos = f.class_index(predicted_class)?;
    let mut out = Vec::new();
    for s in samples.iter().filter(|s| s.label() == Some(true_class)) {
        if f.predict(s)?.argmax() == predicted_pos {
            out.push(s);
        }
    }
    Ok(out)
}

/// The baseline that picks a uniformly random subset of `size` metrics.
pub fn random_mask(num_metrics: usize, size: usize, rng: &mut impl Rng) -> SubstitutionMask {
    SubstitutionMask::from_indices(num_metrics, sample_indices(rng, num_metrics, size.min(num_metrics)))
}

/// Keeps the first `size` set bits of `mask`, in ascending metric order.
pub fn truncate_mask(mask: &SubstitutionMask, size: usize) -> SubstitutionMask {
    SubstitutionMask::from_indices(mask.len(), mask.indices().take(size))
}
