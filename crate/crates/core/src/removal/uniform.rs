use rand::Rng;
use serde::{Deserialize, Serialize};

use super::RunningMean;
use crate::error::{Error, Result};
use crate::model::SharedModel;
use crate::rng::sample_rng;
use crate::subset::FeatureSubset;
use crate::subset_fn::{check_input, SubsetFunction};

/// Per-feature box `[lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl FeatureBounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        for (i, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::InvalidParameter(format!("bounds for feature {i} are not finite")));
            }
            if a > b {
                return Err(Error::DegenerateBounds { feature: i });
            }
        }
        Ok(Self { lo, hi })
    }

    /// Column minima and maxima of `rows`.
    pub fn from_data(rows: &crate::matrix::Matrix) -> Result<Self> {
        if rows.nrows() == 0 {
            return Err(Error::EmptyBackground);
        }
        let d = rows.ncols();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for r in rows.rows() {
            for j in 0..d {
                lo[j] = lo[j].min(r[j]);
                hi[j] = hi[j].max(r[j]);
            }
        }
        Self::new(lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }
}

/// Monte Carlo `E[f(x_S, U_S̄)]` with independent uniform coordinates.
pub struct UniformRemoval {
    model: SharedModel,
    bounds: FeatureBounds,
    n_samples: usize,
}

pub fn uniform_removal(model: SharedModel, bounds: FeatureBounds, n_samples: usize) -> Result<UniformRemoval> {
    if bounds.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: bounds.dim() });
    }
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
    }
    Ok(UniformRemoval { model, bounds, n_samples })
}

impl SubsetFunction for UniformRemoval {
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
                let (a, b) = (self.bounds.lo[j], self.bounds.hi[j]);
                z[j] = if a == b { a } else { a + (b - a) * rng.random::<f64>() };
            }
            acc.push(&self.model.predict(&z));
        }
        Ok(acc.finish())
    }
    fn extension_of(&self) -> Option<&SharedModel> {
        Some(&self.model)
    }
    fn name(&self) -> &'static str {
        "uniform"
    }
}
