//! Counterfactual explanations for multivariate time-series classifiers.
//!
//! Given a sample `x_test` and a class of interest `c`, the engine picks a
//! correctly classified training sample of class `c` (a *distractor*) and
//! searches for the smallest set of whole metrics to copy from it into
//! `x_test` so that the classifier assigns `c` a probability of at least `τ`.
//!
//! ```no_run
//! use comte::{Dataset, DistractorIndex, Explainer, NormalizationParams, SearchConfig};
//! use comte::classifier::LogisticTrainer;
//!
//! # fn main() -> comte::Result<()> {
//! let train = Dataset::read("train.ndjson")?;
//! let params = NormalizationParams::fit(train.samples())?;
//! let normalized = params.apply_all(train.samples())?;
//! let model = LogisticTrainer::default().fit_samples(&normalized, "anomalous")?;
//! let index = DistractorIndex::build(&normalized, &model)?;
//! let explainer = Explainer::new(&model, &index, SearchConfig::default())?.with_normalization(&params);
//! let outcome = explainer.explain(&normalized[0], "anomalous")?;
//! println!("{}", serde_json::to_string_pretty(&outcome)?);
//! # Ok(())
//! # }
//! ```

pub mod classifier;
pub mod dataset;
pub mod distractor;
pub mod error;
pub mod explanation;
pub mod kdtree;
pub mod loss;
pub mod mask;
pub mod metrics;
pub mod normalize;
pub mod probability;
pub mod sample;
pub mod search;
pub mod synthetic;
pub mod wire;

pub use classifier::{BuiltinModel, Classifier};
pub use dataset::Dataset;
pub use distractor::DistractorIndex;
pub use error::{Error, Result};
pub use explanation::{Explanation, SubstitutedMetric};
pub use loss::combine;
pub use mask::SubstitutionMask;
pub use normalize::NormalizationParams;
pub use probability::ClassProbabilities;
pub use sample::{MetricSchema, MultivariateSample};
pub use search::{explain, Explainer, SearchConfig, SearchMethod, SearchOutcome};
pub use wire::ExternalClassifier;
