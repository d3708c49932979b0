//! Summaries that turn a set function into an attribution vector or a selected subset.

mod included;
mod regression;
mod select;
mod shapley;

pub use included::{mean_when_included, InclusionMode};
pub use regression::{lime_linear, shapley_kernel_regression, KernelWeights, RegressionMode, Regularizer, MAX_REGRESSION_DIM};
pub use select::{
    high_value_subset_constrained, high_value_subset_regularized, low_value_subset, minimal_subset_threshold,
    partitioned_subsets, Solver, MAX_CANDIDATES,
};
pub use shapley::{shapley_exact, shapley_permutation_sample};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explanation::Explanation;
use crate::game::SetFunction;
use crate::subset::FeatureSubset;

/// Monte Carlo budget shared by the sampled summaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub n_samples: usize,
    pub seed: u64,
    /// Per-feature inclusion probability; only mask-based summaries read it.
    pub inclusion_prob: f64,
}

impl SamplingPlan {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        Self { n_samples, seed, inclusion_prob: 0.5 }
    }

    pub fn with_inclusion_prob(mut self, p: f64) -> Self {
        self.inclusion_prob = p;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
        }
        if !(self.inclusion_prob > 0.0 && self.inclusion_prob < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "inclusion probability {} is outside (0, 1)",
                self.inclusion_prob
            )));
        }
        Ok(())
    }
}

/// `a_i = u(D) − u(D \ {i})`.
pub fn remove_individual(u: &SetFunction) -> Result<Explanation> {
    let d = u.dim();
    let full = FeatureSubset::full(d);
    let mut queries = vec![full];
    queries.extend((0..d).map(|i| full.without(i)));
    let v = u.values(&queries)?;
    let scores = (0..d).map(|i| v[0] - v[i + 1]).collect();
    Ok(Explanation::attribution(scores, u.eval_count()))
}

/// `a_i = u({i}) − u({})`.
pub fn include_individual(u: &SetFunction) -> Result<Explanation> {
    let d = u.dim();
    let empty = FeatureSubset::empty(d);
    let mut queries = vec![empty];
    queries.extend((0..d).map(|i| empty.with(i)));
    let v = u.values(&queries)?;
    let scores = (0..d).map(|i| v[i + 1] - v[0]).collect();
    Ok(Explanation::attribution(scores, u.eval_count()))
}

/// Rescales nonnegative scores to sum to one.
pub fn normalize_attributions(a: &[f64]) -> Result<Vec<f64>> {
    if let Some(index) = a.iter().position(|&v| v < 0.0 || v.is_nan()) {
        return Err(Error::NegativeEntry { index });
    }
    let total: f64 = a.iter().sum();
    if total == 0.0 {
        return Err(Error::ZeroSum);
    }
    Ok(a.iter().map(|v| v / total).collect())
}

/// [`normalize_attributions`] applied to an attribution explanation.
pub fn normalize_explanation(e: Explanation) -> Result<Explanation> {
    let scores = e
        .scores()
        .ok_or_else(|| Error::InvalidParameter("only attributions can be normalized".into()))?;
    let w = normalize_attributions(scores)?;
    Ok(e.map_scores(w))
}
