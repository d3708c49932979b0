//! Removal strategies: each turns a model plus distributional information into a
//! [`SubsetFunction`](crate::subset_fn::SubsetFunction).
//!
//! Every strategy returns `f(x)` directly at `S = D`, so the extension property
//! holds bit-exactly. Averages use an incremental mean, which reproduces a
//! constant sequence exactly.

mod baseline;
mod conditional;
mod marginal;
mod replacement;
mod separate;
mod tree_dist;
mod uniform;

pub use baseline::{fixed_baseline_removal, FixedBaselineRemoval};
pub use conditional::{
    conditional_empirical_removal, conditional_gaussian_removal, ConditionalEmpiricalRemoval,
    ConditionalGaussianRemoval, GaussianMode, GaussianSpec,
};
pub use marginal::{marginal_removal, product_of_marginals_removal, MarginalRemoval, ProductOfMarginalsRemoval, PRODUCT_CAP};
pub use replacement::{replacement_distribution_removal, ReplacementDistributionRemoval, ReplacementDistributionSet, ReplacementSampler};
pub use separate::{separate_models_removal, SeparateModelsRemoval};
pub use tree_dist::{tree_distribution_removal, TreeDistributionRemoval};
pub use uniform::{uniform_removal, FeatureBounds, UniformRemoval};

use serde::{Deserialize, Serialize};

use crate::data::ColumnKind;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Empirical stand-in for `p(X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundData {
    rows: Matrix,
    column_kinds: Vec<ColumnKind>,
}

impl BackgroundData {
    pub fn new(rows: Matrix, column_kinds: Vec<ColumnKind>) -> Result<Self> {
        if rows.nrows() == 0 {
            return Err(Error::EmptyBackground);
        }
        if column_kinds.len() != rows.ncols() {
            return Err(Error::DimensionMismatch { expected: rows.ncols(), got: column_kinds.len() });
        }
        if !rows.all_finite() {
            return Err(Error::InvalidParameter("background contains non-finite entries".into()));
        }
        Ok(Self { rows, column_kinds })
    }

    pub fn continuous(rows: Matrix) -> Result<Self> {
        let d = rows.ncols();
        Self::new(rows, vec![ColumnKind::Continuous; d])
    }

    pub fn rows(&self) -> &Matrix {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn column_kinds(&self) -> &[ColumnKind] {
        &self.column_kinds
    }
}

/// Exact enumeration or Monte Carlo with `n` draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "samples")]
pub enum SamplingMode {
    Exact,
    Sampled(usize),
}

impl SamplingMode {
    pub(crate) fn validate(self) -> Result<Self> {
        match self {
            Self::Sampled(0) => Err(Error::InvalidParameter("sample count must be at least 1".into())),
            m => Ok(m),
        }
    }
}

/// Running elementwise mean; exact for constant inputs.
pub(crate) struct RunningMean {
    mean: Vec<f64>,
    count: usize,
}

impl RunningMean {
    pub(crate) fn new(width: usize) -> Self {
        Self { mean: vec![0.0; width], count: 0 }
    }

    #[inline]
    pub(crate) fn push(&mut self, v: &[f64]) {
        self.push_weighted(v, 1);
    }

    /// Adds `v` as if it had been pushed `weight` times.
    #[inline]
    pub(crate) fn push_weighted(&mut self, v: &[f64], weight: usize) {
        if weight == 0 {
            return;
        }
        self.count += weight;
        let w = weight as f64 / self.count as f64;
        for (m, x) in self.mean.iter_mut().zip(v) {
            *m += (x - *m) * w;
        }
    }

    pub(crate) fn finish(self) -> Vec<f64> {
        self.mean
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use std::sync::Arc;

    use crate::model::{FnModel, SharedModel};

    pub fn sum_model(d: usize) -> SharedModel {
        Arc::new(FnModel::scalar(d, |x| x.iter().sum()))
    }

    pub fn product_model() -> SharedModel {
        Arc::new(FnModel::scalar(2, |x| x[0] * x[1]))
    }
}
