use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::PredictionModel;

pub const DEFAULT_RIDGE: f64 = 1e-8;

/// `f(x) = β·x + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    #[inline]
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.coefficients.iter().zip(x).map(|(b, v)| b * v).sum::<f64>() + self.intercept
    }
}

impl PredictionModel for LinearModel {
    fn dim(&self) -> usize {
        self.coefficients.len()
    }
    fn out_dim(&self) -> usize {
        1
    }
    fn predict(&self, x: &[f64]) -> Vec<f64> {
        vec![self.decision(x)]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LinearFitOptions {
    /// Ridge penalty applied when the normal equations are singular; `None` disables the fallback.
    pub ridge_fallback: Option<f64>,
}

impl Default for LinearFitOptions {
    fn default() -> Self {
        Self { ridge_fallback: Some(DEFAULT_RIDGE) }
    }
}

/// Ordinary least squares through the normal equations on centered data, solved by Cholesky.
pub fn fit_linear(features: &Matrix, labels: &[f64], opts: LinearFitOptions) -> Result<LinearModel> {
    let n = features.nrows();
    let d = features.ncols();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: labels.len() });
    }
    let y_mean = labels.iter().sum::<f64>() / n as f64;
    if d == 0 {
        return Ok(LinearModel { coefficients: Vec::new(), intercept: y_mean });
    }
    let x_mean = features.column_means();
    let xc = DMatrix::from_fn(n, d, |i, j| features.get(i, j) - x_mean[j]);
    let yc = DVector::from_iterator(n, labels.iter().map(|y| y - y_mean));
    let gram = xc.transpose() * &xc;
    let rhs = xc.transpose() * yc;

    // pivots below this fraction of the largest diagonal entry count as rank loss
    let floor = 1e-12 * gram.diagonal().max().max(f64::MIN_POSITIVE);
    let beta = match gram.clone().cholesky() {
        Some(ch) if n > d && ch.l().diagonal().iter().all(|&v| v * v > floor) => ch.solve(&rhs),
        _ => {
            let lambda = opts.ridge_fallback.ok_or(Error::RankDeficient)?;
            let ridged = gram + DMatrix::identity(d, d) * lambda;
            ridged.cholesky().ok_or(Error::RankDeficient)?.solve(&rhs)
        }
    };
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let intercept = y_mean - coefficients.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
    Ok(LinearModel { coefficients, intercept })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(rows: &[Vec<f64>], y: &[f64]) -> Result<LinearModel> {
        fit_linear(&Matrix::from_rows(rows).unwrap(), y, LinearFitOptions::default())
    }

    #[test]
    fn noiseless_line() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 * 0.7 - 2.0]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 2.0 * r[0] + 1.0).collect();
        let m = fit(&rows, &y).unwrap();
        assert!((m.coefficients[0] - 2.0).abs() < 1e-10);
        assert!((m.intercept - 1.0).abs() < 1e-10);
    }

    #[test]
    fn constant_labels() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let m = fit(&rows, &[4.0; 6]).unwrap();
        assert!(m.coefficients.iter().all(|b| b.abs() < 1e-12));
        assert!((m.intercept - 4.0).abs() < 1e-12);
    }

    #[test]
    fn three_generic_points() {
        // y = x0 + x1 through (1,0), (0,1), (2,3): 3 equations, 3 unknowns
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![2.0, 3.0]];
        let m = fit(&rows, &[1.0, 1.0, 5.0]).unwrap();
        assert!((m.coefficients[0] - 1.0).abs() < 1e-10);
        assert!((m.coefficients[1] - 1.0).abs() < 1e-10);
        assert!(m.intercept.abs() < 1e-10);
    }

    #[test]
    fn collinear_columns_use_ridge_or_fail() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let y: Vec<f64> = (0..5).map(|i| 3.0 * i as f64).collect();
        let m = fit(&rows, &y).unwrap();
        for (r, yy) in rows.iter().zip(&y) {
            assert!((m.decision(r) - yy).abs() < 1e-6);
        }
        let strict = fit_linear(&Matrix::from_rows(&rows).unwrap(), &y, LinearFitOptions { ridge_fallback: None });
        assert!(matches!(strict, Err(Error::RankDeficient)));
    }

    #[test]
    fn residual_gradient_vanishes() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64 * 1.3).sin(), (i as f64 * 0.4).cos() * 2.0]).collect();
        let y: Vec<f64> = rows.iter().enumerate().map(|(i, r)| r[0] - 0.5 * r[1] + (i % 3) as f64 * 0.1).collect();
        let m = fit(&rows, &y).unwrap();
        let mut grad = [0.0; 3];
        for (r, yy) in rows.iter().zip(&y) {
            let res = m.decision(r) - yy;
            grad[0] += res * r[0];
            grad[1] += res * r[1];
            grad[2] += res;
        }
        assert!(grad.iter().map(|g| g * g).sum::<f64>().sqrt() < 1e-8);
    }
}
