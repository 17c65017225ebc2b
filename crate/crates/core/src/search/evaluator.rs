use std::collections::HashMap;

use crate::classifier::Classifier;
use crate::error::Result;
use crate::loss::combine;
use crate::mask::SubstitutionMask;
use crate::sample::MultivariateSample;

/// `f_c(combine(x_test, x_dist, A))` for one (test, distractor) pair,
/// memoized per mask. Classifiers are deterministic, so a repeated mask never
/// needs a second call.
pub(crate) struct MaskEvaluator<'a> {
    f: &'a dyn Classifier,
    class_index: usize,
    x_test: &'a MultivariateSample,
    x_dist: &'a MultivariateSample,
    cache: HashMap<SubstitutionMask, f64>,
    calls: usize,
}

impl<'a> MaskEvaluator<'a> {
    pub(crate) fn new(
        f: &'a dyn Classifier,
        class: &str,
        x_test: &'a MultivariateSample,
        x_dist: &'a MultivariateSample,
    ) -> Result<Self> {
        let class_index = f.class_index(class)?;
        x_test.ensure_same_schema(x_dist)?;
        Ok(Self {
            f,
            class_index,
            x_test,
            x_dist,
            cache: HashMap::new(),
            calls: 0,
        })
    }

    pub(crate) fn num_metrics(&self) -> usize {
        self.x_test.num_metrics()
    }

    pub(crate) fn distractor_id(&self) -> &str {
        self.x_dist.sample_id()
    }

    /// Classifier invocations so far.
    pub(crate) fn calls(&self) -> usize {
        self.calls
    }

    pub(crate) fn probability(&mut self, mask: &SubstitutionMask) -> Result<f64> {
        if let Some(&p) = self.cache.get(mask) {
            return Ok(p);
        }
        let x = combine(self.x_test, self.x_dist, mask)?;
        self.calls += 1;
        let p = self.f.predict(&x)?.get(self.class_index);
        self.cache.insert(mask.clone(), p);
        Ok(p)
    }
}
