//! Set-cover forest: a tree ensemble whose `i`-th tree votes "1" when any
//! metric in its set is 1. Finding the smallest substitution that drives it to
//! probability 1 is exactly the minimum hitting set problem.

use std::collections::BTreeSet;
use std::sync::{Arc, OnceLock};

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::Classifier;
use crate::error::{Error, Result};
use crate::probability::ClassProbabilities;
use crate::sample::MultivariateSample;

/// Exhaustive hitting-set search is limited to universes of this size.
pub const MAX_BRUTEFORCE_UNIVERSE: usize = 20;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawForest", into = "RawForest")]
pub struct SetCoverForest {
    universe_size: usize,
    sets: Vec<BTreeSet<usize>>,
    class_names: Arc<[String]>,
}

impl PartialEq for SetCoverForest {
    fn eq(&self, other: &Self) -> bool {
        self.universe_size == other.universe_size && self.sets == other.sets
    }
}

#[derive(Serialize, Deserialize)]
struct RawForest {
    universe_size: usize,
    sets: Vec<Vec<usize>>,
}

impl TryFrom<RawForest> for SetCoverForest {
    type Error = Error;
    fn try_from(raw: RawForest) -> Result<Self> {
        SetCoverForest::new(raw.universe_size, raw.sets)
    }
}

impl From<SetCoverForest> for RawForest {
    fn from(f: SetCoverForest) -> Self {
        RawForest {
            universe_size: f.universe_size,
            sets: f.sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        }
    }
}

fn class_names() -> Arc<[String]> {
    static NAMES: OnceLock<Arc<[String]>> = OnceLock::new();
    NAMES
        .get_or_init(|| vec!["0".to_string(), "1".to_string()].into())
        .clone()
}

impl SetCoverForest {
    pub fn new<I>(universe_size: usize, sets: impl IntoIterator<Item = I>) -> Result<Self>
    where
        I: IntoIterator<Item = usize>,
    {
        if universe_size == 0 {
            return Err(Error::InvalidConfig("universe must be non-empty".into()));
        }
        let sets: Vec<BTreeSet<usize>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        if sets.is_empty() {
            return Err(Error::InvalidConfig("at least one set is required".into()));
        }
        for (i, s) in sets.iter().enumerate() {
            if s.is_empty() {
                return Err(Error::InvalidConfig(format!("set {i} is empty")));
            }
            if let Some(&j) = s.iter().find(|&&j| j >= universe_size) {
                return Err(Error::InvalidConfig(format!(
                    "set {i} contains {j}, outside universe of size {universe_size}"
                )));
            }
        }
        Ok(Self {
            universe_size,
            sets,
            class_names: class_names(),
        })
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn sets(&self) -> &[BTreeSet<usize>] {
        &self.sets
    }

    /// Elements appearing in at least one set.
    pub fn union(&self) -> BTreeSet<usize> {
        self.sets.iter().flatten().copied().collect()
    }

    pub fn is_hitting_set(&self, elements: &BTreeSet<usize>) -> bool {
        self.sets.iter().all(|s| !s.is_disjoint(elements))
    }

    /// Number of sets containing at least one chosen element.
    pub fn hits(&self, chosen: &[bool]) -> usize {
        self.sets
            .iter()
            .filter(|s| s.iter().any(|&j| chosen[j]))
            .count()
    }
}

impl Classifier for SetCoverForest {
    fn class_names(&self) -> &[String] {
        &self.class_names
    }

    fn predict(&self, x: &MultivariateSample) -> Result<ClassProbabilities> {
        if x.num_metrics() != self.universe_size {
            return Err(Error::DimensionMismatch {
                what: "set-cover metrics",
                expected: self.universe_size,
                got: x.num_metrics(),
            });
        }
        if x.length() != 1 {
            return Err(Error::DimensionMismatch {
                what: "set-cover series length",
                expected: 1,
                got: x.length(),
            });
        }
        let mut chosen = Vec::with_capacity(self.universe_size);
        for (j, &v) in x.values().iter().enumerate() {
            match v {
                v if v == 0.0 => chosen.push(false),
                v if v == 1.0 => chosen.push(true),
                other => {
                    return Err(Error::NonBinary(format!(
                        "metric {} of sample {} is {other}",
                        x.schema().name(j),
                        x.sample_id()
                    )))
                }
            }
        }
        let n = self.sets.len();
        let hit = self.hits(&chosen);
        let p1 = hit as f64 / n as f64;
        let p0 = (n - hit) as f64 / n as f64;
        ClassProbabilities::new(self.class_names.clone(), vec![p0, p1])
    }
}

/// Minimum hitting set by exhaustive enumeration.
///
/// Candidates are tried by increasing size and, within a size, in
/// lexicographic order of their sorted index lists; the first hitting set
/// found is returned.
pub fn hitting_set_bruteforce(forest: &SetCoverForest) -> Result<BTreeSet<usize>> {
    let m = forest.universe_size();
    if m > MAX_BRUTEFORCE_UNIVERSE {
        return Err(Error::UniverseTooLarge {
            size: m,
            max: MAX_BRUTEFORCE_UNIVERSE,
        });
    }
    for size in 1..=m {
        for combo in (0..m).combinations(size) {
            let candidate: BTreeSet<usize> = combo.into_iter().collect();
            if forest.is_hitting_set(&candidate) {
                return Ok(candidate);
            }
        }
    }
    unreachable!("the full universe hits every non-empty set")
}
