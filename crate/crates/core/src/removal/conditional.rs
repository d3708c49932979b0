use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{BackgroundData, RunningMean};
use crate::data::ColumnKind;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::SharedModel;
use crate::rng::sample_rng;
use crate::subset::FeatureSubset;
use crate::subset_fn::{check_input, compose_into, SubsetFunction};

/// Multivariate normal data model `N(μ, Σ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

impl GaussianSpec {
    pub fn new(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Result<Self> {
        let d = mean.len();
        if cov.len() != d || cov.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: cov.len() });
        }
        if mean.iter().chain(cov.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("gaussian parameters must be finite".into()));
        }
        for i in 0..d {
            for j in 0..i {
                if (cov[i][j] - cov[j][i]).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!("covariance is not symmetric at ({i}, {j})")));
                }
            }
        }
        if to_dmatrix(&cov).cholesky().is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self { mean, cov })
    }

    /// Empirical mean and covariance of `rows`, with diagonal jitter added until
    /// the covariance factors.
    pub fn fit(rows: &Matrix) -> Result<Self> {
        if rows.nrows() == 0 {
            return Err(Error::EmptyBackground);
        }
        let mean = rows.column_means();
        let mut cov = rows.covariance();
        let scale = (0..cov.len()).map(|i| cov[i][i]).fold(0.0_f64, f64::max).max(1.0);
        let mut jitter = 0.0;
        for _ in 0..12 {
            match Self::new(mean.clone(), cov.clone()) {
                Err(Error::NotPositiveDefinite) => {
                    let next = if jitter == 0.0 { 1e-10 * scale } else { jitter * 10.0 };
                    for (i, row) in cov.iter_mut().enumerate() {
                        row[i] += next - jitter;
                    }
                    jitter = next;
                }
                other => return other,
            }
        }
        Err(Error::NotPositiveDefinite)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &[Vec<f64>] {
        &self.cov
    }
}

fn to_dmatrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let d = rows.len();
    DMatrix::from_fn(d, d, |i, j| rows[i][j])
}

/// How the held-out block is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode", content = "samples")]
pub enum GaussianMode {
    /// `f(x_S, E[X_S̄ | x_S])`; exact for linear `f`.
    MeanPlugin,
    Sampled(usize),
}

/// Per-subset regression of the held-out block on the kept block.
struct Conditional {
    kept: Vec<usize>,
    held: Vec<usize>,
    /// `Σ_{S̄S} Σ_{SS}^{-1}`, held × kept.
    gain: DMatrix<f64>,
    /// Square root of the conditional covariance.
    root: DMatrix<f64>,
}

/// `E[f(x_S, X_S̄) | X_S = x_S]` under a Gaussian data model.
pub struct ConditionalGaussianRemoval {
    model: SharedModel,
    spec: GaussianSpec,
    sigma: DMatrix<f64>,
    mode: GaussianMode,
    cache: RwLock<HashMap<u64, Arc<Conditional>>>,
}

pub fn conditional_gaussian_removal(
    model: SharedModel,
    spec: GaussianSpec,
    mode: GaussianMode,
) -> Result<ConditionalGaussianRemoval> {
    if spec.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: spec.dim() });
    }
    if mode == GaussianMode::Sampled(0) {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    let sigma = to_dmatrix(&spec.cov);
    Ok(ConditionalGaussianRemoval { model, spec, sigma, mode, cache: RwLock::new(HashMap::new()) })
}

impl ConditionalGaussianRemoval {
    fn conditional(&self, s: FeatureSubset) -> Result<Arc<Conditional>> {
        if let Some(c) = self.cache.read().unwrap().get(&s.bits()) {
            return Ok(c.clone());
        }
        let kept = s.to_vec();
        let held = s.complement().to_vec();
        let sub = |r: &[usize], c: &[usize]| DMatrix::from_fn(r.len(), c.len(), |i, j| self.sigma[(r[i], c[j])]);
        let s_hh = sub(&held, &held);
        let (gain, cond) = if kept.is_empty() {
            (DMatrix::zeros(held.len(), 0), s_hh)
        } else {
            let s_kk = sub(&kept, &kept);
            let s_kh = sub(&kept, &held);
            let chol = s_kk.cholesky().ok_or(Error::NotPositiveDefinite)?;
            // Σ_SS^{-1} Σ_{SS̄}, transposed
            let gain = chol.solve(&s_kh).transpose();
            let cond = &s_hh - &gain * &s_kh;
            (gain, cond)
        };
        let root = match cond.clone().cholesky() {
            Some(c) => c.l(),
            None => {
                let sym = (&cond + cond.transpose()) * 0.5;
                let eig = SymmetricEigen::new(sym);
                let vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
                &eig.eigenvectors * DMatrix::from_diagonal(&vals)
            }
        };
        let c = Arc::new(Conditional { kept, held, gain, root });
        Ok(self.cache.write().unwrap().entry(s.bits()).or_insert(c).clone())
    }

    /// `μ_{S̄|S}` in the order of the held-out indices.
    pub fn conditional_mean(&self, x: &[f64], s: FeatureSubset) -> Result<Vec<f64>> {
        let c = self.conditional(s)?;
        Ok(self.cond_mean(&c, x).iter().copied().collect())
    }

    fn cond_mean(&self, c: &Conditional, x: &[f64]) -> DVector<f64> {
        let mu = &self.spec.mean;
        let dev = DVector::from_iterator(c.kept.len(), c.kept.iter().map(|&i| x[i] - mu[i]));
        let base = DVector::from_iterator(c.held.len(), c.held.iter().map(|&i| mu[i]));
        base + &c.gain * dev
    }
}

impl SubsetFunction for ConditionalGaussianRemoval {
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
        let c = self.conditional(s)?;
        let m = self.cond_mean(&c, x);
        let mut z = x.to_vec();
        match self.mode {
            GaussianMode::MeanPlugin => {
                for (k, &j) in c.held.iter().enumerate() {
                    z[j] = m[k];
                }
                Ok(self.model.predict(&z))
            }
            GaussianMode::Sampled(n) => {
                let h = c.held.len();
                let mut acc = RunningMean::new(self.out_dim());
                for k in 0..n {
                    let mut rng = sample_rng(seed, s.bits(), k as u64);
                    let eps = DVector::from_iterator(h, (0..h).map(|_| StandardNormal.sample(&mut rng)));
                    let draw = &m + &c.root * eps;
                    for (t, &j) in c.held.iter().enumerate() {
                        z[j] = draw[t];
                    }
                    acc.push(&self.model.predict(&z));
                }
                Ok(acc.finish())
            }
        }
    }
    fn extension_of(&self) -> Option<&SharedModel> {
        Some(&self.model)
    }
    fn name(&self) -> &'static str {
        "conditional-gaussian"
    }
}

/// Averages `f` over background rows that match `x` exactly on `S`.
pub struct ConditionalEmpiricalRemoval {
    model: SharedModel,
    bg: BackgroundData,
}

pub fn conditional_empirical_removal(model: SharedModel, bg: BackgroundData) -> Result<ConditionalEmpiricalRemoval> {
    if bg.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: bg.dim() });
    }
    Ok(ConditionalEmpiricalRemoval { model, bg })
}

impl ConditionalEmpiricalRemoval {
    pub fn background(&self) -> &BackgroundData {
        &self.bg
    }
}

impl SubsetFunction for ConditionalEmpiricalRemoval {
    fn dim(&self) -> usize {
        self.model.dim()
    }
    fn out_dim(&self) -> usize {
        self.model.out_dim()
    }
    fn evaluate(&self, x: &[f64], s: FeatureSubset, _seed: u64) -> Result<Vec<f64>> {
        check_input(self, x, s)?;
        if s.is_full() {
            return Ok(self.model.predict(x));
        }
        let kinds = self.bg.column_kinds();
        if let Some(i) = s.indices().find(|&i| kinds[i] != ColumnKind::Categorical) {
            return Err(Error::NonCategoricalConditioning { feature: i });
        }
        let mut z = vec![0.0; x.len()];
        let mut acc = RunningMean::new(self.out_dim());
        let mut matched = false;
        for r in self.bg.rows().rows() {
            if s.indices().all(|i| r[i] == x[i]) {
                compose_into(&mut z, x, s, r);
                acc.push(&self.model.predict(&z));
                matched = true;
            }
        }
        if !matched {
            return Err(Error::NoMatchingRows);
        }
        Ok(acc.finish())
    }
    fn extension_of(&self) -> Option<&SharedModel> {
        Some(&self.model)
    }
    fn name(&self) -> &'static str {
        "conditional-empirical"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FnModel;
    use crate::removal::testing::sum_model;
    use crate::removal::{marginal_removal, SamplingMode};
    use crate::subset::enumerate_subsets;

    fn set(ix: &[usize], d: usize) -> FeatureSubset {
        FeatureSubset::from_indices(ix, d).unwrap()
    }

    #[test]
    fn correlated_conditional_mean() {
        let g = GaussianSpec::new(vec![0.0, 0.0], vec![vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let f = conditional_gaussian_removal(sum_model(2), g, GaussianMode::MeanPlugin).unwrap();
        let v = f.evaluate(&[1.0, 123.0], set(&[0], 2), 0).unwrap()[0];
        assert!((v - 1.5).abs() < 1e-12);
    }

    #[test]
    fn diagonal_covariance_uses_marginal_mean() {
        let g = GaussianSpec::new(vec![2.0, -1.0], vec![vec![4.0, 0.0], vec![0.0, 9.0]]).unwrap();
        let f = conditional_gaussian_removal(sum_model(2), g, GaussianMode::MeanPlugin).unwrap();
        assert_eq!(f.evaluate(&[0.5, 8.0], set(&[0], 2), 0).unwrap(), vec![-0.5]);
        assert_eq!(f.evaluate(&[0.5, 8.0], set(&[0, 1], 2), 0).unwrap(), vec![8.5]);
    }

    #[test]
    fn not_positive_definite() {
        let r = GaussianSpec::new(vec![0.0, 0.0], vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(matches!(r, Err(Error::NotPositiveDefinite)));
        let r = GaussianSpec::new(vec![0.0, 0.0], vec![vec![1.0, 0.2], vec![0.1, 1.0]]);
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn sampled_matches_plugin_for_linear_model() {
        let g = GaussianSpec::new(
            vec![1.0, 0.0, -1.0],
            vec![vec![2.0, 0.6, 0.3], vec![0.6, 1.0, 0.2], vec![0.3, 0.2, 1.5]],
        )
        .unwrap();
        let m: SharedModel = Arc::new(FnModel::scalar(3, |x| x[0] - 2.0 * x[1] + 0.5 * x[2]));
        let plug = conditional_gaussian_removal(m.clone(), g.clone(), GaussianMode::MeanPlugin).unwrap();
        let samp = conditional_gaussian_removal(m, g, GaussianMode::Sampled(20_000)).unwrap();
        let x = [0.3, 1.2, -0.7];
        for s in enumerate_subsets(3).unwrap() {
            let a = plug.evaluate(&x, s, 0).unwrap()[0];
            let b = samp.evaluate(&x, s, 4).unwrap()[0];
            assert!((a - b).abs() < 0.1, "{s:?}: {a} vs {b}");
        }
    }

    #[test]
    fn diagonal_gaussian_equals_marginal_on_matched_background() {
        // columns have means (1, 2) exactly
        let rows = [[0.0, 1.0], [2.0, 3.0], [1.0, 2.0], [1.0, 2.0]];
        let bg = BackgroundData::continuous(Matrix::from_rows(&rows).unwrap()).unwrap();
        let m: SharedModel = Arc::new(FnModel::scalar(2, |x| 3.0 * x[0] - x[1] + 0.25));
        let g = GaussianSpec::new(vec![1.0, 2.0], vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let cg = conditional_gaussian_removal(m.clone(), g, GaussianMode::MeanPlugin).unwrap();
        let mg = marginal_removal(m, bg, SamplingMode::Exact).unwrap();
        let x = [4.0, -3.0];
        for s in enumerate_subsets(2).unwrap() {
            let a = cg.evaluate(&x, s, 0).unwrap()[0];
            let b = mg.evaluate(&x, s, 0).unwrap()[0];
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_adds_jitter_for_collinear_data() {
        let rows: Vec<[f64; 2]> = (0..10).map(|i| [i as f64, 2.0 * i as f64]).collect();
        let g = GaussianSpec::fit(&Matrix::from_rows(&rows).unwrap()).unwrap();
        assert_eq!(g.mean(), &[4.5, 9.0]);
    }

    fn empirical() -> ConditionalEmpiricalRemoval {
        let rows = [[0.0, 10.0], [0.0, 20.0], [1.0, 30.0]];
        let bg = BackgroundData::new(Matrix::from_rows(&rows).unwrap(), vec![ColumnKind::Categorical, ColumnKind::Continuous])
            .unwrap();
        let m: SharedModel = Arc::new(FnModel::scalar(2, |x| x[1]));
        conditional_empirical_removal(m, bg).unwrap()
    }

    #[test]
    fn empirical_examples() {
        let f = empirical();
        assert_eq!(f.evaluate(&[0.0, 0.0], set(&[0], 2), 0).unwrap(), vec![15.0]);
        assert_eq!(f.evaluate(&[1.0, 0.0], set(&[0], 2), 0).unwrap(), vec![30.0]);
        assert!(matches!(f.evaluate(&[2.0, 0.0], set(&[0], 2), 0), Err(Error::NoMatchingRows)));
        assert!(matches!(
            f.evaluate(&[0.0, 10.0], set(&[1], 2), 0),
            Err(Error::NonCategoricalConditioning { feature: 1 })
        ));
        assert_eq!(f.evaluate(&[0.0, 7.0], set(&[0, 1], 2), 0).unwrap(), vec![7.0]);
    }
}
