use super::evaluator::MaskEvaluator;
use crate::classifier::Classifier;
use crate::error::Result;
use crate::mask::SubstitutionMask;
use crate::sample::MultivariateSample;

/// Probability changes below this are treated as no change.
pub const PRUNE_TOLERANCE: f64 = 1e-12;

/// Removes metrics that do not contribute to the target probability.
///
/// Bits are visited in ascending order, repeating passes until nothing
/// changes. Once the mask reaches `target`, a bit is cleared when the
/// probability stays at or above `target`; before that, when clearing it
/// does not lower the probability by more than [`PRUNE_TOLERANCE`]. The result
/// is a fixed point: clearing any remaining bit either drops below `target`
/// or strictly lowers the probability.
pub fn prune_mask(
    x_test: &MultivariateSample,
    class: &str,
    f: &dyn Classifier,
    x_dist: &MultivariateSample,
    mask: &SubstitutionMask,
    target: f64,
) -> Result<SubstitutionMask> {
    let mut evaluator = MaskEvaluator::new(f, class, x_test, x_dist)?;
    prune_with(&mut evaluator, mask.clone(), target)
}

pub(crate) fn prune_with(
    ev: &mut MaskEvaluator<'_>,
    mut mask: SubstitutionMask,
    target: f64,
) -> Result<SubstitutionMask> {
    let mut p = ev.probability(&mask)?;
    loop {
        let mut changed = false;
        for i in 0..mask.len() {
            if !mask.get(i) {
                continue;
            }
            let reduced = mask.without(i);
            let p_reduced = ev.probability(&reduced)?;
            let keep_going = if p >= target {
                p_reduced >= target
            } else {
                p_reduced >= p - PRUNE_TOLERANCE
            };
            if keep_going {
                mask = reduced;
                p = p_reduced;
                changed = true;
            }
        }
        if !changed {
            return Ok(mask);
        }
    }
}

/// Whether `prune_mask` would leave `mask` unchanged.
pub fn is_irreducible(
    x_test: &MultivariateSample,
    class: &str,
    f: &dyn Classifier,
    x_dist: &MultivariateSample,
    mask: &SubstitutionMask,
    target: f64,
) -> Result<bool> {
    Ok(&prune_mask(x_test, class, f, x_dist, mask, target)? == mask)
}
