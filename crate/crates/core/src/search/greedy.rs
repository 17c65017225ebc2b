//! Sequential greedy search.

use super::evaluator::MaskEvaluator;
use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::mask::SubstitutionMask;
use crate::sample::MultivariateSample;

/// Adds one metric at a time, always the one whose substitution gives the
/// highest `f_c`, until `f_c(x′) ≥ target`.
///
/// Requires `f_c(x_dist) ≥ target`, which guarantees termination within `m`
/// iterations: the all-ones mask reproduces `x_dist` exactly. The best move
/// is taken even when it lowers the probability. Ties go to the lowest
/// metric index.
pub fn greedy_search(
    x_test: &MultivariateSample,
    class: &str,
    f: &dyn Classifier,
    x_dist: &MultivariateSample,
    target: f64,
) -> Result<SubstitutionMask> {
    let mut evaluator = MaskEvaluator::new(f, class, x_test, x_dist)?;
    greedy_with(&mut evaluator, target)
}

pub(crate) fn greedy_with(ev: &mut MaskEvaluator<'_>, target: f64) -> Result<SubstitutionMask> {
    let m = ev.num_metrics();
    let full = SubstitutionMask::full(m);
    let p_dist = ev.probability(&full)?;
    if p_dist < target {
        return Err(Error::DistractorBelowTarget {
            distractor_id: ev.distractor_id().to_string(),
            probability: p_dist,
            target,
        });
    }

    let mut mask = SubstitutionMask::empty(m);
    let mut p = ev.probability(&mask)?;
    while p < target {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..m).filter(|&i| !mask.get(i)) {
            let p_i = ev.probability(&mask.with(i))?;
            // Improvement is p_i − p for every candidate, so comparing p_i
            // directly ranks them without rounding ties.
            if best.map_or(true, |(_, b)| p_i > b) {
                best = Some((i, p_i));
            }
        }
        let Some((i, p_i)) = best else {
            break;
        };
        mask.set(i, true);
        p = p_i;
    }
    Ok(mask)
}
