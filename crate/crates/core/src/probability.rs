//! Class probability vectors returned by classifiers.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the probability sum for built-in classifiers.
pub const BUILTIN_SUM_TOLERANCE: f64 = 1e-9;

/// Tolerance on the probability sum for external classifiers; rows inside it
/// are renormalized, rows outside it are rejected.
pub const EXTERNAL_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassProbabilities {
    class_names: Arc<[String]>,
    per_class: Vec<f64>,
}

impl ClassProbabilities {
    /// Validates entries in `[0, 1]` summing to 1 within [`BUILTIN_SUM_TOLERANCE`].
    pub fn new(class_names: Arc<[String]>, per_class: Vec<f64>) -> Result<Self> {
        check_entries(&class_names, &per_class)?;
        let sum: f64 = per_class.iter().sum();
        if (sum - 1.0).abs() > BUILTIN_SUM_TOLERANCE {
            return Err(Error::InvalidProbabilities(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self {
            class_names,
            per_class,
        })
    }

    /// Validates a row received from an external classifier, renormalizing
    /// small transport error.
    pub fn from_external(class_names: Arc<[String]>, per_class: Vec<f64>) -> Result<Self> {
        check_entries(&class_names, &per_class)?;
        let sum: f64 = per_class.iter().sum();
        // The slack keeps decimal bounds such as 0.999999 inside the band.
        if (sum - 1.0).abs() > EXTERNAL_SUM_TOLERANCE + 4.0 * f64::EPSILON {
            return Err(Error::InvalidProbabilities(format!(
                "probabilities sum to {sum}, outside 1 ± {EXTERNAL_SUM_TOLERANCE}"
            )));
        }
        let per_class = per_class.into_iter().map(|p| (p / sum).min(1.0)).collect();
        Ok(Self {
            class_names,
            per_class,
        })
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn values(&self) -> &[f64] {
        &self.per_class
    }

    pub fn get(&self, class_index: usize) -> f64 {
        self.per_class[class_index]
    }

    pub fn by_name(&self, class: &str) -> Option<f64> {
        self.class_index(class).map(|i| self.per_class[i])
    }

    pub fn class_index(&self, class: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == class)
    }

    /// Index of the most probable class; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.per_class.iter().enumerate().skip(1) {
            if p > self.per_class[best] {
                best = i;
            }
        }
        best
    }

    pub fn predicted_class(&self) -> &str {
        &self.class_names[self.argmax()]
    }
}

fn check_entries(class_names: &[String], per_class: &[f64]) -> Result<()> {
    if class_names.is_empty() {
        return Err(Error::InvalidProbabilities("no classes".into()));
    }
    if class_names.len() != per_class.len() {
        return Err(Error::InvalidProbabilities(format!(
            "{} probabilities for {} classes",
            per_class.len(),
            class_names.len()
        )));
    }
    if let Some(p) = per_class
        .iter()
        .find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0)
    {
        return Err(Error::InvalidProbabilities(format!(
            "entry {p} outside [0, 1]"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> Arc<[String]> {
        vec!["a".to_string(), "b".to_string()].into()
    }

    #[test]
    fn builtin_rows_must_sum_to_one() {
        assert!(ClassProbabilities::new(names(), vec![0.25, 0.75]).is_ok());
        assert!(ClassProbabilities::new(names(), vec![0.25, 0.7]).is_err());
        assert!(ClassProbabilities::new(names(), vec![-0.1, 1.1]).is_err());
        assert!(ClassProbabilities::new(names(), vec![1.0]).is_err());
    }

    #[test]
    fn external_rows_are_renormalized_within_tolerance() {
        let p = ClassProbabilities::from_external(names(), vec![0.4999995, 0.4999995]).unwrap();
        assert!(ClassProbabilities::from_external(names(), vec![0.999999, 0.0]).is_ok());
        assert!(ClassProbabilities::from_external(names(), vec![0.5000006, 0.5000006]).is_err());
        assert!((p.values().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(p.get(0), p.get(1));
        assert!(ClassProbabilities::from_external(names(), vec![0.25, 0.25]).is_err());
    }

    #[test]
    fn argmax_breaks_ties_low() {
        let p = ClassProbabilities::new(names(), vec![0.5, 0.5]).unwrap();
        assert_eq!(p.argmax(), 0);
        assert_eq!(p.predicted_class(), "a");
        assert_eq!(p.by_name("b"), Some(0.5));
        assert_eq!(p.by_name("c"), None);
    }
}
