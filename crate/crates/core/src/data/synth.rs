use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::FnModel;
use crate::subset::FeatureSubset;

/// Closed-form quantities for `y = β·x + ε`, `x ~ N(μ, Σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLinearOracle {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
    pub noise_std: f64,
}

impl GaussianLinearOracle {
    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    /// The noiseless model `f(x) = β·x`.
    pub fn model(&self) -> FnModel {
        let beta = self.beta.clone();
        FnModel::scalar(beta.len(), move |x| beta.iter().zip(x).map(|(b, v)| b * v).sum())
    }

    fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.cov[rows[i]][cols[j]])
    }

    /// `E[X_S̄ | X_S = x_S]` stacked in the order of `S̄`'s members.
    fn conditional_mean(&self, x: &[f64], s: FeatureSubset) -> DVector<f64> {
        let inc = s.to_vec();
        let out = s.complement().to_vec();
        let mu_out = DVector::from_iterator(out.len(), out.iter().map(|&i| self.mean[i]));
        if inc.is_empty() {
            return mu_out;
        }
        let dev = DVector::from_iterator(inc.len(), inc.iter().map(|&i| x[i] - self.mean[i]));
        let w = self.block(&inc, &inc).lu().solve(&dev).expect("covariance block is invertible");
        mu_out + self.block(&out, &inc) * w
    }

    /// `E[f(X) | X_S = x_S] = β_S·x_S + β_S̄·μ_{S̄|S}`.
    pub fn conditional_expectation(&self, x: &[f64], s: FeatureSubset) -> f64 {
        let known: f64 = s.indices().map(|i| self.beta[i] * x[i]).sum();
        let cm = self.conditional_mean(x, s);
        known + s.complement().indices().zip(cm.iter()).map(|(i, m)| self.beta[i] * m).sum::<f64>()
    }

    /// `Var(f(X)) = βᵀΣβ`.
    pub fn output_variance(&self) -> f64 {
        let d = self.dim();
        (0..d).flat_map(|a| (0..d).map(move |b| (a, b))).map(|(a, b)| self.beta[a] * self.cov[a][b] * self.beta[b]).sum()
    }

    /// `Var(E[f(X) | X_S]) = βᵀΣβ − β_S̄ᵀ Σ_{S̄|S} β_S̄`.
    pub fn explained_variance(&self, s: FeatureSubset) -> f64 {
        let inc = s.to_vec();
        let out = s.complement().to_vec();
        if out.is_empty() {
            return self.output_variance();
        }
        let mut cond = self.block(&out, &out);
        if !inc.is_empty() {
            let cross = self.block(&out, &inc);
            let inv = self.block(&inc, &inc).try_inverse().expect("covariance block is invertible");
            cond -= &cross * inv * cross.transpose();
        }
        let b = DVector::from_iterator(out.len(), out.iter().map(|&i| self.beta[i]));
        self.output_variance() - (b.transpose() * cond * &b)[(0, 0)]
    }

    /// Shapley values of the dataset-loss game under conditional removal and MSE,
    /// available when the covariance is diagonal: `φ_i = β_i² Σ_ii`.
    pub fn dataset_loss_shapley(&self) -> Option<Vec<f64>> {
        let d = self.dim();
        let diagonal = (0..d).all(|a| (0..d).all(|b| a == b || self.cov[a][b] == 0.0));
        diagonal.then(|| (0..d).map(|i| self.beta[i] * self.beta[i] * self.cov[i][i]).collect())
    }
}

/// Draws `n` rows `x ~ N(mean, cov)` with labels `y = β·x + ε`, `ε ~ N(0, noise_std²)`.
pub fn synth_gaussian_linear(
    dim: usize,
    mean: &[f64],
    cov: &[Vec<f64>],
    beta: &[f64],
    noise_std: f64,
    n: usize,
    seed: u64,
) -> Result<(LabeledDataset, GaussianLinearOracle)> {
    if mean.len() != dim || beta.len() != dim || cov.len() != dim || cov.iter().any(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: mean.len() });
    }
    if noise_std < 0.0 {
        return Err(Error::InvalidParameter("noise_std must be nonnegative".into()));
    }
    let sigma = DMatrix::from_fn(dim, dim, |i, j| cov[i][j]);
    let chol = sigma.cholesky().ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let z = DVector::from_iterator(dim, (0..dim).map(|_| StandardNormal.sample(&mut rng)));
        let x = &l * z;
        let eps: f64 = StandardNormal.sample(&mut rng);
        let mut y = noise_std * eps;
        for i in 0..dim {
            let xi = mean[i] + x[i];
            y += beta[i] * xi;
            data.push(xi);
        }
        labels.push(y);
    }
    let ds = LabeledDataset::new(Matrix::new(n, dim, data)?, labels)?;
    let oracle = GaussianLinearOracle { mean: mean.to_vec(), cov: cov.to_vec(), beta: beta.to_vec(), noise_std };
    Ok((ds, oracle))
}
