//! Random-restart hill climbing over substitution masks.

use rand::Rng;

use super::evaluator::MaskEvaluator;
use super::SearchConfig;
use crate::classifier::Classifier;
use crate::error::Result;
use crate::loss::relaxed_loss_value;
use crate::mask::SubstitutionMask;
use crate::sample::MultivariateSample;

/// Minimizes the relaxed loss with single-bit-flip hill climbing, restarting
/// `num_restarts` times from random masks.
///
/// A restart stops after `max_iters` neighbor evaluations or after
/// `max_attempts` consecutive rejected neighbors. Moves with equal loss are
/// accepted. Returns the final mask of the restart with the lowest loss; the
/// earliest restart wins ties. The result need not reach `tau`.
pub fn hill_climb(
    x_test: &MultivariateSample,
    class: &str,
    f: &dyn Classifier,
    x_dist: &MultivariateSample,
    config: &SearchConfig,
) -> Result<SubstitutionMask> {
    let mut evaluator = MaskEvaluator::new(f, class, x_test, x_dist)?;
    let mut rng = config.rng(0);
    hill_climb_with(&mut evaluator, config, &mut rng, &mut |_, _| {})
}

/// `on_accept(restart, loss)` sees the initial loss of each restart and every
/// accepted move.
pub(crate) fn hill_climb_with(
    ev: &mut MaskEvaluator<'_>,
    config: &SearchConfig,
    rng: &mut impl Rng,
    on_accept: &mut dyn FnMut(usize, f64),
) -> Result<SubstitutionMask> {
    let m = ev.num_metrics();
    let loss = |p: f64, mask: &SubstitutionMask| {
        relaxed_loss_value(p, mask.cardinality(), config.tau, config.delta, config.lambda)
    };
    let mut best: Option<(f64, SubstitutionMask)> = None;
    for restart in 0..config.num_restarts {
        let mut current = random_initial_mask(m, config.delta, rng);
        let mut current_loss = loss(ev.probability(&current)?, &current);
        on_accept(restart, current_loss);
        let (mut attempts, mut iters) = (0, 0);
        while attempts < config.max_attempts && iters < config.max_iters {
            iters += 1;
            let candidate = random_neighbor(&current, rng);
            let candidate_loss = loss(ev.probability(&candidate)?, &candidate);
            if candidate_loss <= current_loss {
                attempts = 0;
                current = candidate;
                current_loss = candidate_loss;
                on_accept(restart, current_loss);
            } else {
                attempts += 1;
            }
        }
        if best.as_ref().map_or(true, |(l, _)| current_loss < *l) {
            best = Some((current_loss, current));
        }
    }
    Ok(best.map(|(_, mask)| mask).unwrap_or_else(|| SubstitutionMask::empty(m)))
}

/// Flips exactly one uniformly chosen bit. Panics on an empty mask.
pub fn random_neighbor(mask: &SubstitutionMask, rng: &mut impl Rng) -> SubstitutionMask {
    assert!(!mask.is_empty(), "random_neighbor needs at least one metric");
    let mut out = mask.clone();
    out.flip(rng.gen_range(0..mask.len()));
    out
}

/// Each bit is set independently with probability `min(δ/m, 0.5)`.
pub(crate) fn random_initial_mask(m: usize, delta: usize, rng: &mut impl Rng) -> SubstitutionMask {
    let p = if m == 0 { 0.0 } else { (delta as f64 / m as f64).min(0.5) };
    SubstitutionMask::from_bits((0..m).map(|_| rng.gen_bool(p)).collect())
}
