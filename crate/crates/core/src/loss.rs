//! Metric substitution and the explanation losses.

use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::mask::SubstitutionMask;
use crate::sample::MultivariateSample;

/// `x′ = (I − A)·x_test + A·x_dist`.
///
/// Implemented as row selection, so every output row is bit-identical to the
/// corresponding row of one of the inputs. The result keeps the test sample's
/// id and label.
pub fn combine(
    x_test: &MultivariateSample,
    x_dist: &MultivariateSample,
    mask: &SubstitutionMask,
) -> Result<MultivariateSample> {
    x_test.ensure_same_schema(x_dist)?;
    if mask.len() != x_test.num_metrics() {
        return Err(Error::SchemaMismatch {
            dimension: "mask length",
            expected: x_test.num_metrics().to_string(),
            got: mask.len().to_string(),
        });
    }
    let mut values = Vec::with_capacity(x_test.values().len());
    for metric in 0..x_test.num_metrics() {
        let source = if mask.get(metric) { x_dist } else { x_test };
        values.extend_from_slice(source.row(metric));
    }
    Ok(MultivariateSample::from_parts_unchecked(
        x_test.schema().clone(),
        x_test.sample_id().to_string(),
        x_test.label().map(str::to_string),
        values,
    ))
}

/// `(1 − p)² + λ·‖A‖₁` for a known class probability `p`.
pub fn strict_loss_value(probability: f64, cardinality: usize, lambda: f64) -> f64 {
    (1.0 - probability).powi(2) + lambda * cardinality as f64
}

/// `((τ − p)⁺)² + λ·(‖A‖₁ − δ)⁺` for a known class probability `p`.
pub fn relaxed_loss_value(
    probability: f64,
    cardinality: usize,
    tau: f64,
    delta: usize,
    lambda: f64,
) -> f64 {
    let shortfall = (tau - probability).max(0.0);
    let excess = cardinality.saturating_sub(delta) as f64;
    shortfall * shortfall + lambda * excess
}

pub fn loss_strict(
    f: &dyn Classifier,
    class: &str,
    mask: &SubstitutionMask,
    x_prime: &MultivariateSample,
    lambda: f64,
) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {lambda}")));
    }
    let p = class_probability(f, class, x_prime)?;
    Ok(strict_loss_value(p, mask.cardinality(), lambda))
}

pub fn loss_relaxed(
    f: &dyn Classifier,
    class: &str,
    mask: &SubstitutionMask,
    x_prime: &MultivariateSample,
    tau: f64,
    delta: usize,
    lambda: f64,
) -> Result<f64> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidConfig(format!("tau must be in (0, 1], got {tau}")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {lambda}")));
    }
    let p = class_probability(f, class, x_prime)?;
    Ok(relaxed_loss_value(p, mask.cardinality(), tau, delta, lambda))
}

/// `f_c(x)`.
pub fn class_probability(f: &dyn Classifier, class: &str, x: &MultivariateSample) -> Result<f64> {
    let index = f.class_index(class)?;
    Ok(f.predict(x)?.get(index))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use proptest::prelude::*;

    use super::*;
    use crate::classifier::FnClassifier;
    use crate::sample::MetricSchema;

    fn pair(m: usize, t: usize) -> (MultivariateSample, MultivariateSample) {
        let schema = Arc::new(MetricSchema::new((0..m).map(|j| format!("m{j}")), t).unwrap());
        let test = (0..m * t).map(|i| i as f64).collect();
        let dist = (0..m * t).map(|i| -(i as f64) - 0.5).collect();
        (
            MultivariateSample::new(schema.clone(), "test", None, test).unwrap(),
            MultivariateSample::new(schema, "dist", None, dist).unwrap(),
        )
    }

    #[test]
    fn combine_identity_cases() {
        let (x, d) = pair(3, 4);
        assert_eq!(combine(&x, &d, &SubstitutionMask::empty(3)).unwrap().values(), x.values());
        assert_eq!(combine(&x, &d, &SubstitutionMask::full(3)).unwrap().values(), d.values());
    }

    #[test]
    fn combine_selects_rows() {
        let (x, d) = pair(3, 4);
        let out = combine(&x, &d, &SubstitutionMask::from_indices(3, [1])).unwrap();
        assert_eq!(out.row(0), x.row(0));
        assert_eq!(out.row(1), d.row(1));
        assert_eq!(out.row(2), x.row(2));
    }

    #[test]
    fn combine_rejects_mismatches() {
        let (x, _) = pair(3, 4);
        let (_, other) = pair(3, 5);
        assert!(matches!(
            combine(&x, &other, &SubstitutionMask::empty(3)),
            Err(Error::SchemaMismatch { dimension: "series length", .. })
        ));
        let (x, d) = pair(3, 4);
        assert!(matches!(
            combine(&x, &d, &SubstitutionMask::empty(2)),
            Err(Error::SchemaMismatch { dimension: "mask length", .. })
        ));
    }

    #[test]
    fn strict_loss_examples() {
        assert_eq!(strict_loss_value(1.0, 0, 0.3), 0.0);
        assert!((strict_loss_value(0.5, 4, 0.01) - 0.29).abs() < 1e-15);
        assert_eq!(strict_loss_value(0.0, 7, 0.0), 1.0);
    }

    #[test]
    fn relaxed_loss_examples() {
        assert_eq!(relaxed_loss_value(0.95, 3, 0.95, 3, 0.5), 0.0);
        assert!((relaxed_loss_value(0.5, 5, 0.95, 3, 1.0) - 2.2025).abs() < 1e-12);
        assert_eq!(relaxed_loss_value(0.99, 2, 0.95, 3, 10.0), 0.0);
    }

    #[test]
    fn loss_functions_evaluate_the_classifier() {
        let (x, _) = pair(2, 1);
        let names: Arc<[String]> = vec!["no".to_string(), "yes".to_string()].into();
        let f = FnClassifier::new(names, |_| Ok(vec![0.5, 0.5]));
        let mask = SubstitutionMask::full(2);
        let strict = loss_strict(&f, "yes", &mask, &x, 0.01).unwrap();
        assert!((strict - 0.27).abs() < 1e-15);
        let relaxed = loss_relaxed(&f, "yes", &mask, &x, 0.95, 3, 1.0).unwrap();
        assert!((relaxed - 0.2025).abs() < 1e-12);
        assert!(loss_strict(&f, "maybe", &mask, &x, 0.01).is_err());
        assert!(loss_relaxed(&f, "yes", &mask, &x, 0.0, 3, 1.0).is_err());
        assert!(loss_strict(&f, "yes", &mask, &x, -1.0).is_err());
    }

    fn samples_and_mask() -> impl Strategy<Value = (MultivariateSample, MultivariateSample, SubstitutionMask)> {
        (1usize..6, 1usize..5).prop_flat_map(|(m, t)| {
            (
                prop::collection::vec(-1e6f64..1e6, m * t),
                prop::collection::vec(-1e6f64..1e6, m * t),
                prop::collection::vec(any::<bool>(), m),
            )
                .prop_map(move |(a, b, bits)| {
                    let schema =
                        Arc::new(MetricSchema::new((0..m).map(|j| format!("m{j}")), t).unwrap());
                    (
                        MultivariateSample::new(schema.clone(), "x", None, a).unwrap(),
                        MultivariateSample::new(schema, "d", None, b).unwrap(),
                        SubstitutionMask::from_bits(bits),
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn combine_is_idempotent_and_complement_symmetric((x, d, mask) in samples_and_mask()) {
            let once = combine(&x, &d, &mask).unwrap();
            let twice = combine(&once, &d, &mask).unwrap();
            prop_assert_eq!(once.values(), twice.values());
            let swapped = combine(&d, &x, &mask.complement()).unwrap();
            prop_assert_eq!(once.values(), swapped.values());
        }

        #[test]
        fn relaxed_loss_monotonicity(
            p1 in 0.0f64..=1.0, p2 in 0.0f64..=1.0,
            c1 in 0usize..20, c2 in 0usize..20,
            tau in 0.01f64..=1.0, delta in 0usize..6, lambda in 0.0f64..5.0,
        ) {
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            prop_assert!(relaxed_loss_value(hi, c1, tau, delta, lambda) <= relaxed_loss_value(lo, c1, tau, delta, lambda));
            let (small, big) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
            prop_assert!(relaxed_loss_value(p1, small, tau, delta, lambda) <= relaxed_loss_value(p1, big, tau, delta, lambda));
        }

        #[test]
        fn relaxed_loss_zero_iff_target_met(
            p in 0.0f64..=1.0, c in 0usize..20, tau in 0.01f64..=1.0,
            delta in 0usize..6, lambda in 0.001f64..5.0,
        ) {
            let zero = relaxed_loss_value(p, c, tau, delta, lambda) == 0.0;
            prop_assert_eq!(zero, p >= tau && c <= delta);
        }
    }
}
