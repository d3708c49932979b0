//! Subset functions `F(x, S)` and the checks for invariance and model extension.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::SharedModel;
use crate::subset::FeatureSubset;

/// A prediction function over `(input, feature subset)` pairs.
///
/// Stochastic implementations must be pure given `(x, S, seed)`.
pub trait SubsetFunction: Send + Sync {
    fn dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn evaluate(&self, x: &[f64], s: FeatureSubset, seed: u64) -> Result<Vec<f64>>;

    /// Whether `F(x, S)` ignores every coordinate outside `S`.
    fn is_invariant(&self) -> bool {
        true
    }

    /// The model this function agrees with at `S = D`, when there is one.
    fn extension_of(&self) -> Option<&SharedModel>;

    fn name(&self) -> &'static str;
}

pub type SharedSubsetFunction = Arc<dyn SubsetFunction>;

pub(crate) fn check_input(f: &dyn SubsetFunction, x: &[f64], s: FeatureSubset) -> Result<()> {
    if x.len() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: x.len() });
    }
    if s.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: s.dim() });
    }
    Ok(())
}

/// Writes `(x_S, fill_S̄)` into `out`.
#[inline]
pub(crate) fn compose_into(out: &mut [f64], x: &[f64], s: FeatureSubset, fill: &[f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = if s.contains(i) { x[i] } else { fill[i] };
    }
}

/// Does `F(x, S, seed) == F(x', S, seed)` hold exactly?
pub fn check_invariance(
    f: &dyn SubsetFunction,
    x: &[f64],
    x_alt: &[f64],
    s: FeatureSubset,
    seed: u64,
) -> Result<bool> {
    check_input(f, x, s)?;
    check_input(f, x_alt, s)?;
    if let Some(i) = s.indices().find(|&i| x[i] != x_alt[i]) {
        return Err(Error::PreconditionViolation(format!(
            "inputs differ on feature {i}, which is in the subset"
        )));
    }
    let a = f.evaluate(x, s, seed)?;
    let b = f.evaluate(x_alt, s, seed)?;
    Ok(a == b)
}

/// Does `F(x, D) == f(x)` hold exactly for every probe?
pub fn check_extension(
    f: &dyn SubsetFunction,
    model: &dyn crate::model::PredictionModel,
    probes: &[Vec<f64>],
) -> Result<bool> {
    if f.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: f.dim() });
    }
    let full = FeatureSubset::full(f.dim());
    for x in probes {
        if f.evaluate(x, full, 0)? != model.predict(x) {
            return Ok(false);
        }
    }
    Ok(true)
}
