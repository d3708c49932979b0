use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::PredictionModel;

/// Binary logistic regression. Outputs `[P(y=0), P(y=1)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticModel {
    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.coefficients.iter().zip(x).map(|(b, v)| b * v).sum::<f64>() + self.intercept)
    }
}

impl PredictionModel for LogisticModel {
    fn dim(&self) -> usize {
        self.coefficients.len()
    }
    fn out_dim(&self) -> usize {
        2
    }
    fn predict(&self, x: &[f64]) -> Vec<f64> {
        let p = self.probability(x);
        vec![1.0 - p, p]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LogisticFitOptions {
    pub max_iters: usize,
    pub step: f64,
    /// Stop once the gradient's ∞-norm falls below this.
    pub tolerance: f64,
}

impl Default for LogisticFitOptions {
    fn default() -> Self {
        Self { max_iters: 10_000, step: 0.1, tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct LogisticFit {
    pub model: LogisticModel,
    pub iterations: usize,
    /// Mean cross-entropy before each step and after the last one.
    pub losses: Vec<f64>,
}

fn mean_cross_entropy(m: &LogisticModel, x: &Matrix, y: &[f64]) -> f64 {
    let eps = 1e-15;
    x.rows()
        .zip(y)
        .map(|(r, &t)| {
            let p = m.probability(r).clamp(eps, 1.0 - eps);
            -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
        })
        .sum::<f64>()
        / y.len() as f64
}

/// Full-batch gradient descent on mean cross-entropy.
pub fn fit_logistic_traced(features: &Matrix, labels: &[f64], opts: LogisticFitOptions) -> Result<LogisticFit> {
    let n = features.nrows();
    let d = features.ncols();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: labels.len() });
    }
    if labels.iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(Error::NonBinaryLabels);
    }
    let mut model = LogisticModel { coefficients: vec![0.0; d], intercept: 0.0 };
    let mut losses = Vec::new();
    let mut grad = vec![0.0; d + 1];
    let mut iterations = 0;
    for _ in 0..opts.max_iters {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (r, &y) in features.rows().zip(labels) {
            let res = model.probability(r) - y;
            for (g, v) in grad.iter_mut().zip(r) {
                *g += res * v;
            }
            grad[d] += res;
        }
        grad.iter_mut().for_each(|g| *g /= n as f64);
        if grad.iter().all(|g| g.abs() < opts.tolerance) {
            break;
        }
        losses.push(mean_cross_entropy(&model, features, labels));
        for (b, g) in model.coefficients.iter_mut().zip(&grad) {
            *b -= opts.step * g;
        }
        model.intercept -= opts.step * grad[d];
        iterations += 1;
    }
    losses.push(mean_cross_entropy(&model, features, labels));
    Ok(LogisticFit { model, iterations, losses })
}

pub fn fit_logistic(features: &Matrix, labels: &[f64], opts: LogisticFitOptions) -> Result<LogisticModel> {
    fit_logistic_traced(features, labels, opts).map(|f| f.model)
}
