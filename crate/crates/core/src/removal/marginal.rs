use rand::Rng;

use super::{BackgroundData, RunningMean, SamplingMode};
use crate::error::{Error, Result};
use crate::model::SharedModel;
use crate::rng::sample_rng;
use crate::subset::FeatureSubset;
use crate::subset_fn::{check_input, compose_into, SubsetFunction};

/// Largest Cartesian product the exact product-of-marginals mode will enumerate.
pub const PRODUCT_CAP: f64 = 1e7;

fn check_background(model: &SharedModel, bg: &BackgroundData) -> Result<()> {
    if bg.is_empty() {
        return Err(Error::EmptyBackground);
    }
    if bg.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: bg.dim() });
    }
    Ok(())
}

/// `F(x, S) = E[f(x_S, X_S̄)]` under the joint marginal of the background rows.
pub struct MarginalRemoval {
    model: SharedModel,
    bg: BackgroundData,
    mode: SamplingMode,
}

pub fn marginal_removal(model: SharedModel, bg: BackgroundData, mode: SamplingMode) -> Result<MarginalRemoval> {
    check_background(&model, &bg)?;
    Ok(MarginalRemoval { model, bg, mode: mode.validate()? })
}

impl SubsetFunction for MarginalRemoval {
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
        let rows = self.bg.rows();
        let mut z = vec![0.0; x.len()];
        let mut acc = RunningMean::new(self.out_dim());
        match self.mode {
            SamplingMode::Exact => {
                for r in rows.rows() {
                    compose_into(&mut z, x, s, r);
                    acc.push(&self.model.predict(&z));
                }
            }
            SamplingMode::Sampled(n) => {
                for k in 0..n {
                    let i = sample_rng(seed, s.bits(), k as u64).random_range(0..rows.nrows());
                    compose_into(&mut z, x, s, rows.row(i));
                    acc.push(&self.model.predict(&z));
                }
            }
        }
        Ok(acc.finish())
    }
    fn extension_of(&self) -> Option<&SharedModel> {
        Some(&self.model)
    }
    fn name(&self) -> &'static str {
        "marginal"
    }
}

/// `F(x, S) = E[f(x_S, X_S̄)]` with `X_S̄ ~ ∏_{i∈S̄} p(X_i)`.
pub struct ProductOfMarginalsRemoval {
    model: SharedModel,
    /// Column-major copy of the background.
    columns: Vec<Vec<f64>>,
    mode: SamplingMode,
}

pub fn product_of_marginals_removal(
    model: SharedModel,
    bg: BackgroundData,
    mode: SamplingMode,
) -> Result<ProductOfMarginalsRemoval> {
    check_background(&model, &bg)?;
    let columns = (0..bg.dim()).map(|j| bg.rows().column(j)).collect();
    Ok(ProductOfMarginalsRemoval { model, columns, mode: mode.validate()? })
}

impl SubsetFunction for ProductOfMarginalsRemoval {
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
        let held: Vec<usize> = s.complement().to_vec();
        let n = self.columns[0].len();
        let mut z = x.to_vec();
        let mut acc = RunningMean::new(self.out_dim());
        match self.mode {
            SamplingMode::Exact => {
                let terms = (n as f64).powi(held.len() as i32);
                if terms > PRODUCT_CAP {
                    return Err(Error::ProductTooLarge { terms, cap: PRODUCT_CAP });
                }
                // odometer over held-out coordinates, last coordinate fastest
                let mut idx = vec![0usize; held.len()];
                loop {
                    for (&j, &i) in held.iter().zip(&idx) {
                        z[j] = self.columns[j][i];
                    }
                    acc.push(&self.model.predict(&z));
                    let mut p = held.len();
                    loop {
                        if p == 0 {
                            return Ok(acc.finish());
                        }
                        p -= 1;
                        idx[p] += 1;
                        if idx[p] < n {
                            break;
                        }
                        idx[p] = 0;
                    }
                }
            }
            SamplingMode::Sampled(m) => {
                for k in 0..m {
                    let mut rng = sample_rng(seed, s.bits(), k as u64);
                    for &j in &held {
                        z[j] = self.columns[j][rng.random_range(0..n)];
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
        "product-of-marginals"
    }
}
