//! Explanation search: sequential greedy, random-restart hill climbing, the
//! pruning pass, and the sweep over distractor candidates.

mod evaluator;
mod greedy;
mod hill_climb;
mod prune;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use greedy::greedy_search;
pub use hill_climb::{hill_climb, random_neighbor};
pub use prune::{is_irreducible, prune_mask, PRUNE_TOLERANCE};

use self::evaluator::MaskEvaluator;
use crate::classifier::Classifier;
use crate::distractor::{Candidate, DistractorIndex};
use crate::error::{Error, Result};
use crate::explanation::Explanation;
use crate::loss::relaxed_loss_value;
use crate::mask::SubstitutionMask;
use crate::normalize::NormalizationParams;
use crate::sample::MultivariateSample;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMethod {
    #[default]
    Greedy,
    HillClimb,
}

impl std::str::FromStr for SearchMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(SearchMethod::Greedy),
            "hillclimb" => Ok(SearchMethod::HillClimb),
            other => Err(Error::InvalidConfig(format!(
                "unknown method {other:?}, expected greedy or hillclimb"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Target probability.
    pub tau: f64,
    /// Explanation size below which no sparsity penalty applies.
    pub delta: usize,
    /// Sparsity weight.
    pub lambda: f64,
    pub num_distractors: usize,
    pub rng_seed: u64,
    pub num_restarts: usize,
    pub max_attempts: usize,
    /// May be 0, in which case hill climbing returns its initial masks.
    pub max_iters: usize,
    pub method: SearchMethod,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            tau: 0.95,
            delta: 3,
            lambda: 0.01,
            num_distractors: 3,
            rng_seed: 0,
            num_restarts: 5,
            max_attempts: 50,
            max_iters: 1000,
            method: SearchMethod::Greedy,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return fail(format!("tau must be in (0, 1], got {}", self.tau));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return fail(format!("lambda must be finite and >= 0, got {}", self.lambda));
        }
        for (name, value) in [
            ("num_distractors", self.num_distractors),
            ("num_restarts", self.num_restarts),
            ("max_attempts", self.max_attempts),
        ] {
            if value == 0 {
                return fail(format!("{name} must be >= 1"));
            }
        }
        Ok(())
    }

    /// Generator for the `stream`-th distractor candidate.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(stream);
        rng
    }
}

/// How the winning mask was found.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeMethod {
    Greedy,
    Hillclimb,
    HillclimbFallbackGreedy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub explanation: Explanation,
    pub method: OutcomeMethod,
    /// Relaxed loss of the explanation.
    pub loss: f64,
    /// Classifier calls made while searching.
    pub evaluations: usize,
    pub distractors_tried: usize,
}

struct CandidateResult {
    mask: SubstitutionMask,
    probability: f64,
    loss: f64,
    method: OutcomeMethod,
    calls: usize,
}

/// Searches the `num_distractors` nearest distractors of the target class and
/// keeps the explanation with the lowest relaxed loss.
pub struct Explainer<'a> {
    f: &'a dyn Classifier,
    index: &'a DistractorIndex,
    config: SearchConfig,
    normalization: Option<&'a NormalizationParams>,
}

impl<'a> Explainer<'a> {
    /// `index` must have been built with `f`: the stored probabilities
    /// select τ-qualified distractors.
    pub fn new(f: &'a dyn Classifier, index: &'a DistractorIndex, config: SearchConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            f,
            index,
            config,
            normalization: None,
        })
    }

    /// Report substituted series in original units.
    pub fn with_normalization(mut self, params: &'a NormalizationParams) -> Self {
        self.normalization = Some(params);
        self
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    /// Explains why `x_test` (normalized) is not classified as `class`.
    pub fn explain(&self, x_test: &MultivariateSample, class: &str) -> Result<SearchOutcome> {
        let cfg = &self.config;
        let class_pos = self.f.class_index(class)?;
        let class_index = self.index.class(class)?;
        let p_test = self.f.predict(x_test)?.get(class_pos);

        if p_test >= cfg.tau {
            let nearest = if class_index.is_empty() {
                None
            } else {
                class_index.nearest_candidates(x_test, 1)?.into_iter().next()
            };
            let x_dist = nearest.map_or(x_test, |c| c.sample);
            let mask = SubstitutionMask::empty(x_test.num_metrics());
            return Ok(SearchOutcome {
                explanation: Explanation::new(x_test, x_dist, class, mask, p_test, self.normalization)?,
                method: OutcomeMethod::Greedy,
                loss: relaxed_loss_value(p_test, 0, cfg.tau, cfg.delta, cfg.lambda),
                evaluations: 1,
                distractors_tried: 0,
            });
        }

        let qualified = class_index.nearest_candidates_where(x_test, cfg.num_distractors, |c| {
            c.probabilities.get(class_pos) >= cfg.tau
        })?;
        // Without a τ-qualified distractor, each candidate's own probability
        // becomes its target: the full mask always reaches it.
        let candidates: Vec<(Candidate<'_>, f64)> = if qualified.is_empty() {
            class_index
                .nearest_candidates(x_test, cfg.num_distractors)?
                .into_iter()
                .map(|c| {
                    let target = c.probabilities.get(class_pos);
                    (c, target)
                })
                .collect()
        } else {
            qualified.into_iter().map(|c| (c, cfg.tau)).collect()
        };

        let run = |(rank, (candidate, target)): (usize, &(Candidate<'_>, f64))| {
            self.search_candidate(x_test, class, candidate.sample, *target, rank as u64)
        };
        let results: Vec<CandidateResult> = if self.f.supports_concurrency() && candidates.len() > 1 {
            candidates.par_iter().enumerate().map(run).collect::<Result<_>>()?
        } else {
            candidates.iter().enumerate().map(run).collect::<Result<_>>()?
        };

        let mut best = 0;
        for (i, r) in results.iter().enumerate() {
            if r.loss < results[best].loss {
                best = i;
            }
        }
        let evaluations = 1 + results.iter().map(|r| r.calls).sum::<usize>();
        let distractors_tried = results.len();
        let winner = results.into_iter().nth(best).expect("at least one candidate");
        let x_dist = candidates[best].0.sample;
        Ok(SearchOutcome {
            explanation: Explanation::new(
                x_test,
                x_dist,
                class,
                winner.mask,
                winner.probability,
                self.normalization,
            )?,
            method: winner.method,
            loss: winner.loss,
            evaluations,
            distractors_tried,
        })
    }

    fn search_candidate(
        &self,
        x_test: &MultivariateSample,
        class: &str,
        x_dist: &MultivariateSample,
        target: f64,
        stream: u64,
    ) -> Result<CandidateResult> {
        let cfg = &self.config;
        let mut ev = MaskEvaluator::new(self.f, class, x_test, x_dist)?;
        let (mask, method) = match cfg.method {
            SearchMethod::Greedy => {
                let mask = greedy::greedy_with(&mut ev, target)?;
                (prune::prune_with(&mut ev, mask, target)?, OutcomeMethod::Greedy)
            }
            SearchMethod::HillClimb => {
                let mut rng = cfg.rng(stream);
                let raw = hill_climb::hill_climb_with(&mut ev, cfg, &mut rng, &mut |_, _| {})?;
                let pruned = prune::prune_with(&mut ev, raw, target)?;
                if pruned.cardinality() == 0 || ev.probability(&pruned)? < target {
                    let mask = greedy::greedy_with(&mut ev, target)?;
                    (
                        prune::prune_with(&mut ev, mask, target)?,
                        OutcomeMethod::HillclimbFallbackGreedy,
                    )
                } else {
                    (pruned, OutcomeMethod::Hillclimb)
                }
            }
        };
        let probability = ev.probability(&mask)?;
        Ok(CandidateResult {
            loss: relaxed_loss_value(probability, mask.cardinality(), cfg.tau, cfg.delta, cfg.lambda),
            mask,
            probability,
            method,
            calls: ev.calls(),
        })
    }
}

/// One-shot form of [`Explainer::explain`].
pub fn explain(
    x_test: &MultivariateSample,
    class: &str,
    f: &dyn Classifier,
    index: &DistractorIndex,
    config: &SearchConfig,
) -> Result<SearchOutcome> {
    Explainer::new(f, index, config.clone())?.explain(x_test, class)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::classifier::{hitting_set_bruteforce, SetCoverForest};
    use crate::loss::combine;
    use crate::sample::MetricSchema;

    fn binary(schema: &Arc<MetricSchema>, id: &str, label: &str, bits: &[u8]) -> MultivariateSample {
        MultivariateSample::new(
            schema.clone(),
            id,
            Some(label.to_string()),
            bits.iter().map(|&b| b as f64).collect(),
        )
        .unwrap()
    }

    fn schema(m: usize) -> Arc<MetricSchema> {
        Arc::new(MetricSchema::new((0..m).map(|j| format!("u{j}")), 1).unwrap())
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig::default().validate().is_ok());
        let zero_iters = SearchConfig { max_iters: 0, ..SearchConfig::default() };
        assert!(zero_iters.validate().is_ok());
        for bad in [
            SearchConfig { tau: 0.0, ..SearchConfig::default() },
            SearchConfig { tau: 1.5, ..SearchConfig::default() },
            SearchConfig { lambda: -1.0, ..SearchConfig::default() },
            SearchConfig { num_distractors: 0, ..SearchConfig::default() },
            SearchConfig { num_restarts: 0, ..SearchConfig::default() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn sample_already_at_target_gets_empty_explanation() {
        let s = schema(3);
        let forest = SetCoverForest::new(3, [vec![0], vec![2]]).unwrap();
        let training = vec![binary(&s, "d", "1", &[1, 1, 1]), binary(&s, "z", "0", &[0, 0, 0])];
        let index = DistractorIndex::build(&training, &forest).unwrap();
        let x = binary(&s, "t", "1", &[1, 0, 1]);
        let out = explain(&x, "1", &forest, &index, &SearchConfig::default()).unwrap();
        assert_eq!(out.explanation.size(), 0);
        assert!(out.explanation.substituted_metrics.is_empty());
        assert_eq!(out.loss, 0.0);
        assert_eq!(out.distractors_tried, 0);
    }

    #[test]
    fn single_distractor_matches_greedy() {
        let s = schema(4);
        let forest = SetCoverForest::new(4, [vec![0, 1], vec![2, 3], vec![0, 2]]).unwrap();
        let training = vec![binary(&s, "d", "1", &[1, 1, 1, 1]), binary(&s, "z", "0", &[0, 0, 0, 0])];
        let index = DistractorIndex::build(&training, &forest).unwrap();
        let x = binary(&s, "t", "0", &[0, 0, 0, 0]);
        let config = SearchConfig { num_distractors: 1, tau: 1.0, ..SearchConfig::default() };
        let out = explain(&x, "1", &forest, &index, &config).unwrap();
        let direct = greedy_search(&x, "1", &forest, &training[0], 1.0).unwrap();
        assert_eq!(out.explanation.mask, direct);
        assert_eq!(out.explanation.distractor_id, "d");
        assert_eq!(out.method, OutcomeMethod::Greedy);
    }

    /// The nearer distractor needs metrics 0, 1 and 2; the farther one
    /// satisfies every requirement through metric 3 alone.
    fn two_distractor_instance() -> (Arc<MetricSchema>, impl Classifier, Vec<MultivariateSample>) {
        let s = schema(4);
        // Class "1" probability: fraction of the three requirements met.
        // Requirement k is met when metric k equals 1, or when metric 3
        // equals 2 (one metric that satisfies all three at once).
        let names: Arc<[String]> = vec!["0".to_string(), "1".to_string()].into();
        let f = crate::classifier::FnClassifier::new(names, |x| {
            let v = x.values();
            let met = (0..3).filter(|&k| v[k] == 1.0 || v[3] == 2.0).count();
            let p = met as f64 / 3.0;
            Ok(vec![1.0 - p, p])
        });
        let near = MultivariateSample::new(s.clone(), "near", Some("1".into()), vec![1.0, 1.0, 1.0, 0.0]).unwrap();
        let far = MultivariateSample::new(s.clone(), "far", Some("1".into()), vec![0.0, 0.0, 0.0, 2.0]).unwrap();
        let other = MultivariateSample::new(s.clone(), "o", Some("0".into()), vec![0.0, 0.0, 0.0, 0.0]).unwrap();
        (s, f, vec![near, far, other])
    }

    #[test]
    fn farther_distractor_with_smaller_mask_wins() {
        let (s, f, training) = two_distractor_instance();
        let x = MultivariateSample::new(s, "t", None, vec![0.0, 0.0, 0.0, 0.0]).unwrap();
        // Distances: near = √3, far = 2.
        assert!(x.distance(&training[0]) < x.distance(&training[1]));
        let index = DistractorIndex::build(&training, &f).unwrap();
        for (delta, method) in [(0, SearchMethod::Greedy), (0, SearchMethod::HillClimb), (3, SearchMethod::Greedy)] {
            let config = SearchConfig { num_distractors: 2, delta, lambda: 0.01, method, ..SearchConfig::default() };
            let out = explain(&x, "1", &f, &index, &config).unwrap();
            if delta == 0 {
                assert_eq!(out.explanation.distractor_id, "far");
                assert_eq!(out.explanation.mask, SubstitutionMask::from_indices(4, [3]));
            } else {
                // Both masks fit within δ, so their losses tie at 0 and the
                // nearer distractor wins.
                assert_eq!(out.explanation.distractor_id, "near");
            }
            assert_eq!(out.distractors_tried, 2);
        }
        // Exhaustive check of the minimum mask size per distractor.
        for (d, expected) in [(&training[0], 3), (&training[1], 1)] {
            let min = (0u32..16)
                .map(|b| SubstitutionMask::from_bits((0..4).map(|j| b >> j & 1 == 1).collect()))
                .filter(|m| f.predict(&combine(&x, d, m).unwrap()).unwrap().get(1) >= 0.95)
                .map(|m| m.cardinality())
                .min()
                .unwrap();
            assert_eq!(min, expected);
        }
    }

    #[test]
    fn no_distractor_is_an_error() {
        let s = schema(2);
        let forest = SetCoverForest::new(2, [vec![0]]).unwrap();
        // The only "1"-labeled sample is misclassified, so index["1"] is empty.
        let training = vec![binary(&s, "a", "1", &[0, 0]), binary(&s, "b", "0", &[0, 1])];
        let index = DistractorIndex::build(&training, &forest).unwrap();
        let x = binary(&s, "t", "0", &[0, 0]);
        let err = explain(&x, "1", &forest, &index, &SearchConfig::default()).unwrap_err();
        assert_eq!(err.code(), "no-distractor");
    }

    #[test]
    fn falls_back_to_unqualified_distractors() {
        // Argmax agrees with the label but no distractor reaches τ.
        let s = schema(3);
        let forest = SetCoverForest::new(3, [vec![0], vec![1], vec![2], vec![0, 1]]).unwrap();
        let training = vec![binary(&s, "d", "1", &[1, 1, 0]), binary(&s, "z", "0", &[0, 0, 0])];
        let index = DistractorIndex::build(&training, &forest).unwrap();
        let x = binary(&s, "t", "0", &[0, 0, 0]);
        let out = explain(&x, "1", &forest, &index, &SearchConfig::default()).unwrap();
        assert_eq!(out.explanation.achieved_probability, 0.75);
        assert_eq!(out.explanation.mask, SubstitutionMask::from_indices(3, [0, 1]));
    }

    #[test]
    fn outcome_is_deterministic_and_serial_equals_parallel() {
        struct Serial<C>(C);
        impl<C: Classifier> Classifier for Serial<C> {
            fn class_names(&self) -> &[String] {
                self.0.class_names()
            }
            fn predict(&self, x: &MultivariateSample) -> Result<crate::probability::ClassProbabilities> {
                self.0.predict(x)
            }
            fn supports_concurrency(&self) -> bool {
                false
            }
        }
        let s = schema(8);
        let forest = SetCoverForest::new(8, [vec![0, 1], vec![2, 5], vec![6], vec![3, 7]]).unwrap();
        let training: Vec<_> = (0..12u32)
            .map(|i| {
                let bits: Vec<u8> = (0..8).map(|j| ((i * 37 + j * 11) % 5 != 0) as u8).collect();
                let p = forest.hits(&bits.iter().map(|&b| b == 1).collect::<Vec<_>>()) as f64 / 4.0;
                binary(&s, &format!("s{i}"), if p > 0.5 { "1" } else { "0" }, &bits)
            })
            .collect();
        let index = DistractorIndex::build(&training, &forest).unwrap();
        let x = binary(&s, "t", "0", &[0; 8]);
        for method in [SearchMethod::Greedy, SearchMethod::HillClimb] {
            let config = SearchConfig { method, rng_seed: 11, num_distractors: 3, tau: 1.0, ..SearchConfig::default() };
            let a = explain(&x, "1", &forest, &index, &config).unwrap();
            let b = explain(&x, "1", &forest, &index, &config).unwrap();
            let c = explain(&x, "1", &Serial(&forest), &index, &config).unwrap();
            let json = serde_json::to_string(&a).unwrap();
            assert_eq!(json, serde_json::to_string(&b).unwrap());
            assert_eq!(json, serde_json::to_string(&c).unwrap());
            let optimum = hitting_set_bruteforce(&forest).unwrap();
            assert!(a.explanation.size() >= optimum.len());
        }
    }
}
