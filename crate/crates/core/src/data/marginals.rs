use super::ColumnKind;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const DEFAULT_QUANTILE_BINS: usize = 4;

/// Empirical summary of one feature column.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMarginal {
    Categorical {
        /// Distinct values, ascending.
        values: Vec<f64>,
        /// Relative frequency of each entry of `values`.
        frequencies: Vec<f64>,
    },
    Continuous {
        min: f64,
        max: f64,
        sorted: Vec<f64>,
        /// `bins + 1` edges: min, interior quantiles, max.
        edges: Vec<f64>,
        bin_means: Vec<f64>,
        bin_stds: Vec<f64>,
    },
}

impl FeatureMarginal {
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Self::Categorical { values, .. } => (values[0], values[values.len() - 1]),
            Self::Continuous { min, max, .. } => (*min, *max),
        }
    }

    /// Quantile bin holding `v`: bin 0 is `[min, e1]`, bin k is `(e_k, e_{k+1}]`.
    pub fn bin_of(&self, v: f64) -> Option<usize> {
        match self {
            Self::Continuous { edges, .. } => {
                let interior = &edges[1..edges.len() - 1];
                Some(interior.iter().filter(|&&e| e < v).count())
            }
            Self::Categorical { .. } => None,
        }
    }
}

/// Linear-interpolation (type 7) sample quantile of sorted data.
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn summarize(column: Vec<f64>, kind: ColumnKind, bins: usize) -> FeatureMarginal {
    let mut sorted = column;
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    match kind {
        ColumnKind::Categorical => {
            let mut values: Vec<f64> = Vec::new();
            let mut counts: Vec<usize> = Vec::new();
            for &v in &sorted {
                if values.last() == Some(&v) {
                    *counts.last_mut().unwrap() += 1;
                } else {
                    values.push(v);
                    counts.push(1);
                }
            }
            let frequencies = counts.iter().map(|&c| c as f64 / n).collect();
            FeatureMarginal::Categorical { values, frequencies }
        }
        ColumnKind::Continuous => {
            let edges: Vec<f64> = (0..=bins).map(|k| quantile_type7(&sorted, k as f64 / bins as f64)).collect();
            let mut members: Vec<Vec<f64>> = vec![Vec::new(); bins];
            let interior = &edges[1..bins];
            for &v in &sorted {
                members[interior.iter().filter(|&&e| e < v).count()].push(v);
            }
            let (bin_means, bin_stds) = members
                .iter()
                .enumerate()
                .map(|(k, m)| if m.is_empty() { (0.5 * (edges[k] + edges[k + 1]), 0.0) } else { mean_std(m) })
                .unzip();
            FeatureMarginal::Continuous {
                min: sorted[0],
                max: sorted[sorted.len() - 1],
                sorted,
                edges,
                bin_means,
                bin_stds,
            }
        }
    }
}

/// Per-feature marginal summaries with `bins` quantile bins for continuous columns.
pub fn empirical_marginals(data: &Matrix, kinds: &[ColumnKind], bins: usize) -> Result<Vec<FeatureMarginal>> {
    if data.nrows() == 0 {
        return Err(Error::EmptyDataset);
    }
    if kinds.len() != data.ncols() {
        return Err(Error::DimensionMismatch { expected: data.ncols(), got: kinds.len() });
    }
    if bins < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 quantile bins, got {bins}")));
    }
    Ok((0..data.ncols()).map(|j| summarize(data.column(j), kinds[j], bins)).collect())
}
