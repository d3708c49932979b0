//! Datasets, CSV ingestion, empirical marginals and synthetic generators.

mod csv_io;
mod marginals;
mod synth;

pub use csv_io::{load_csv, write_csv, ColumnSpec, DatasetSchema};
pub use marginals::{empirical_marginals, quantile_type7, FeatureMarginal, DEFAULT_QUANTILE_BINS};
pub use synth::{synth_gaussian_linear, GaussianLinearOracle};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Continuous,
    Categorical,
}

/// Features, targets and (optionally) per-row label distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Matrix,
    labels: Vec<f64>,
    has_labels: bool,
    label_distributions: Option<Vec<Vec<f64>>>,
    column_kinds: Vec<ColumnKind>,
    feature_names: Vec<String>,
    /// Category names per feature, in encoding order; empty for continuous columns.
    categories: Vec<Vec<String>>,
    /// Category names of the label when it is categorical.
    label_categories: Option<Vec<String>>,
}

impl LabeledDataset {
    /// All-continuous dataset with generated feature names.
    pub fn new(features: Matrix, labels: Vec<f64>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::DimensionMismatch { expected: features.nrows(), got: labels.len() });
        }
        if !features.all_finite() || labels.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("dataset contains non-finite values".into()));
        }
        let d = features.ncols();
        Ok(Self {
            features,
            labels,
            has_labels: true,
            label_distributions: None,
            column_kinds: vec![ColumnKind::Continuous; d],
            feature_names: (0..d).map(|i| format!("x{i}")).collect(),
            categories: vec![Vec::new(); d],
            label_categories: None,
        })
    }

    /// Dataset without a label column; label-based behaviors reject it.
    pub fn unlabeled(features: Matrix) -> Result<Self> {
        let n = features.nrows();
        let mut ds = Self::new(features, vec![0.0; n])?;
        ds.has_labels = false;
        Ok(ds)
    }

    pub fn has_labels(&self) -> bool {
        self.has_labels
    }

    pub fn with_column_kinds(mut self, kinds: Vec<ColumnKind>) -> Result<Self> {
        if kinds.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: kinds.len() });
        }
        self.column_kinds = kinds;
        Ok(self)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: names.len() });
        }
        self.feature_names = names;
        Ok(self)
    }

    pub(crate) fn with_categories(mut self, categories: Vec<Vec<String>>, label: Option<Vec<String>>) -> Self {
        self.categories = categories;
        self.label_categories = label;
        self
    }

    /// Attaches `p(Y | X = x_row)` for every row; each must sum to 1 within 1e-9.
    pub fn with_label_distributions(mut self, dists: Vec<Vec<f64>>) -> Result<Self> {
        if dists.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: dists.len() });
        }
        for (row, p) in dists.iter().enumerate() {
            validate_distribution(p).map_err(|e| match e {
                Error::InvalidDistribution(m) => Error::InvalidDistribution(format!("row {row}: {m}")),
                other => other,
            })?;
        }
        self.label_distributions = Some(dists);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn label_distributions(&self) -> Option<&[Vec<f64>]> {
        self.label_distributions.as_deref()
    }

    pub fn column_kinds(&self) -> &[ColumnKind] {
        &self.column_kinds
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn categories(&self) -> &[Vec<String>] {
        &self.categories
    }

    pub fn label_categories(&self) -> Option<&[String]> {
        self.label_categories.as_deref()
    }

    /// Number of classes when labels are class indices 0..c.
    pub fn class_count(&self) -> Option<usize> {
        if let Some(c) = &self.label_categories {
            return Some(c.len());
        }
        let integral = self.labels.iter().all(|&y| y >= 0.0 && y.fract() == 0.0);
        integral.then(|| self.labels.iter().fold(0.0f64, |m, &y| m.max(y)) as usize + 1)
    }

    /// First `n` rows (all rows when `n >= len`).
    pub fn head(&self, n: usize) -> Self {
        let n = n.min(self.len());
        let rows: Vec<&[f64]> = (0..n).map(|i| self.row(i)).collect();
        let features = if n == 0 { Matrix::zeros(0, self.dim()) } else { Matrix::from_rows(&rows).expect("rows share width") };
        Self {
            features,
            labels: self.labels[..n].to_vec(),
            label_distributions: self.label_distributions.as_ref().map(|d| d[..n].to_vec()),
            ..self.clone()
        }
    }
}

pub(crate) fn validate_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidDistribution("empty distribution".into()));
    }
    if p.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::InvalidDistribution("entries must lie in [0, 1]".into()));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_distribution_must_sum_to_one() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let ds = LabeledDataset::new(x, vec![0.0, 1.0]).unwrap();
        assert!(ds.clone().with_label_distributions(vec![vec![0.5, 0.5], vec![0.2, 0.7]]).is_err());
        assert!(ds.with_label_distributions(vec![vec![0.5, 0.5], vec![0.3, 0.7]]).is_ok());
    }

    #[test]
    fn class_count_from_integral_labels() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        assert_eq!(LabeledDataset::new(x.clone(), vec![0.0, 2.0, 1.0]).unwrap().class_count(), Some(3));
        assert_eq!(LabeledDataset::new(x, vec![0.5, 2.0, 1.0]).unwrap().class_count(), None);
    }
}
