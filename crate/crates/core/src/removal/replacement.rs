use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use super::{BackgroundData, RunningMean};
use crate::data::{empirical_marginals, FeatureMarginal, DEFAULT_QUANTILE_BINS};
use crate::error::{Error, Result};
use crate::model::SharedModel;
use crate::rng::sample_rng;
use crate::subset::FeatureSubset;
use crate::subset_fn::{check_input, SubsetFunction};

/// Draws a replacement for one feature given its original value.
#[derive(Debug, Clone, PartialEq)]
pub enum ReplacementSampler {
    /// Empirical distribution restricted to values different from the original.
    Categorical { values: Vec<f64>, frequencies: Vec<f64> },
    /// Pick another quantile bin uniformly, then a truncated normal inside it.
    Continuous { edges: Vec<f64>, means: Vec<f64>, stds: Vec<f64> },
}

impl ReplacementSampler {
    fn from_marginal(m: FeatureMarginal, feature: usize) -> Result<Self> {
        match m {
            FeatureMarginal::Categorical { values, frequencies } => {
                if values.len() < 2 {
                    return Err(Error::DegenerateColumn { feature });
                }
                Ok(Self::Categorical { values, frequencies })
            }
            FeatureMarginal::Continuous { edges, bin_means, bin_stds, .. } => {
                Ok(Self::Continuous { edges, means: bin_means, stds: bin_stds })
            }
        }
    }

    /// Quantile bin of `v` for continuous samplers.
    pub fn bin_of(&self, v: f64) -> Option<usize> {
        match self {
            Self::Continuous { edges, .. } => Some(edges[1..edges.len() - 1].iter().filter(|&&e| e < v).count()),
            Self::Categorical { .. } => None,
        }
    }

    /// Edges `(lo, hi)` of bin `k`.
    pub fn bin_edges(&self, k: usize) -> Option<(f64, f64)> {
        match self {
            Self::Continuous { edges, .. } => edges.get(k + 1).map(|&hi| (edges[k], hi)),
            Self::Categorical { .. } => None,
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, original: f64, rng: &mut R) -> f64 {
        match self {
            Self::Categorical { values, frequencies } => {
                let total: f64 = values
                    .iter()
                    .zip(frequencies)
                    .filter(|(v, _)| **v != original)
                    .map(|(_, f)| f)
                    .sum();
                let mut u = rng.random::<f64>() * total;
                let mut last = original;
                for (&v, &f) in values.iter().zip(frequencies) {
                    if v == original {
                        continue;
                    }
                    last = v;
                    if u < f {
                        return v;
                    }
                    u -= f;
                }
                last
            }
            Self::Continuous { edges, means, stds } => {
                let bins = means.len();
                let own = self.bin_of(original).unwrap();
                let mut k = rng.random_range(0..bins - 1);
                if k >= own {
                    k += 1;
                }
                let (lo, hi) = (edges[k], edges[k + 1]);
                truncated_normal(means[k], stds[k], lo, hi, rng.random::<f64>())
            }
        }
    }
}

/// Inverse-CDF draw from `N(mu, sigma²)` truncated to `[lo, hi]`.
fn truncated_normal(mu: f64, sigma: f64, lo: f64, hi: f64, u: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    if sigma <= 0.0 || !sigma.is_finite() {
        return mu.clamp(lo, hi);
    }
    let n = Normal::new(mu, sigma).expect("positive sigma");
    let (a, b) = (n.cdf(lo), n.cdf(hi));
    if b - a <= f64::EPSILON {
        // both edges far in one tail
        return lo + (hi - lo) * u;
    }
    n.inverse_cdf(a + u * (b - a)).clamp(lo, hi)
}

/// One sampler per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplacementDistributionSet {
    samplers: Vec<ReplacementSampler>,
}

impl ReplacementDistributionSet {
    pub fn new(samplers: Vec<ReplacementSampler>) -> Self {
        Self { samplers }
    }

    /// Builds samplers from the background with `bins` quantile bins per continuous column.
    pub fn from_background(bg: &BackgroundData, bins: usize) -> Result<Self> {
        let marginals = empirical_marginals(bg.rows(), bg.column_kinds(), bins)?;
        let samplers = marginals
            .into_iter()
            .enumerate()
            .map(|(j, m)| ReplacementSampler::from_marginal(m, j))
            .collect::<Result<_>>()?;
        Ok(Self { samplers })
    }

    pub fn from_background_default(bg: &BackgroundData) -> Result<Self> {
        Self::from_background(bg, DEFAULT_QUANTILE_BINS)
    }

    pub fn dim(&self) -> usize {
        self.samplers.len()
    }

    pub fn sampler(&self, i: usize) -> &ReplacementSampler {
        &self.samplers[i]
    }
}

/// Monte Carlo over `∏_{i∈S̄} q_{x_i}`; the held-out draws depend on `x_S̄`.
pub struct ReplacementDistributionRemoval {
    model: SharedModel,
    q: ReplacementDistributionSet,
    n_samples: usize,
}

pub fn replacement_distribution_removal(
    model: SharedModel,
    q: ReplacementDistributionSet,
    n_samples: usize,
) -> Result<ReplacementDistributionRemoval> {
    if q.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: q.dim() });
    }
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
    }
    Ok(ReplacementDistributionRemoval { model, q, n_samples })
}

impl SubsetFunction for ReplacementDistributionRemoval {
    fn dim(&self) -> usize {
        self.model.dim()
    }
    fn out_dim(&self) -> usize {
        self.model.out_dim()
    }
    fn evaluate(&self, x: &[f64], s: FeatureSubset, seed: u64) -> Result<Vec<f64>> {
        check_input(self, x, s)?;
        if s.is_full() {
            return Ok(self.model.predict(x));
        }
        let held = s.complement().to_vec();
        let mut z = x.to_vec();
        let mut acc = RunningMean::new(self.out_dim());
        for k in 0..self.n_samples {
            let mut rng = sample_rng(seed, s.bits(), k as u64);
            for &j in &held {
                z[j] = self.q.samplers[j].draw(x[j], &mut rng);
            }
            acc.push(&self.model.predict(&z));
        }
        Ok(acc.finish())
    }
    fn is_invariant(&self) -> bool {
        false
    }
    fn extension_of(&self) -> Option<&SharedModel> {
        Some(&self.model)
    }
    fn name(&self) -> &'static str {
        "replacement-distribution"
    }
}
