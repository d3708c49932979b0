use crate::error::{Error, Result};
use crate::model::SharedModel;
use crate::subset::FeatureSubset;
use crate::subset_fn::{check_input, compose_into, SubsetFunction};

/// `F(x, S) = f(x_S, b_S̄)` for a fixed baseline `b` (zeros or user defaults).
pub struct FixedBaselineRemoval {
    model: SharedModel,
    baseline: Vec<f64>,
}

pub fn fixed_baseline_removal(model: SharedModel, baseline: Vec<f64>) -> Result<FixedBaselineRemoval> {
    if baseline.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: baseline.len() });
    }
    if baseline.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("baseline must be finite".into()));
    }
    Ok(FixedBaselineRemoval { model, baseline })
}

impl FixedBaselineRemoval {
    pub fn baseline(&self) -> &[f64] {
        &self.baseline
    }
}

impl SubsetFunction for FixedBaselineRemoval {
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
        let mut z = vec![0.0; x.len()];
        compose_into(&mut z, x, s, &self.baseline);
        Ok(self.model.predict(&z))
    }
    fn extension_of(&self) -> Option<&SharedModel> {
        Some(&self.model)
    }
    fn name(&self) -> &'static str {
        "fixed-baseline"
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::FnModel;
    use crate::removal::testing::{product_model, sum_model};

    fn set(ix: &[usize], d: usize) -> FeatureSubset {
        FeatureSubset::from_indices(ix, d).unwrap()
    }

    #[test]
    fn zeros_baseline() {
        let f = fixed_baseline_removal(sum_model(2), vec![0.0, 0.0]).unwrap();
        assert_eq!(f.evaluate(&[2.0, 3.0], set(&[0], 2), 0).unwrap(), vec![2.0]);
    }

    #[test]
    fn multiplicative_identity_baseline() {
        let f = fixed_baseline_removal(product_model(), vec![1.0, 1.0]).unwrap();
        assert_eq!(f.evaluate(&[5.0, 7.0], set(&[1], 2), 0).unwrap(), vec![7.0]);
    }

    #[test]
    fn full_set_is_model() {
        let m: SharedModel = Arc::new(FnModel::scalar(3, |x| x[0].sin() * x[1] + x[2]));
        let f = fixed_baseline_removal(m.clone(), vec![0.3, -1.0, 2.0]).unwrap();
        let x = [0.7, 1.1, -4.0];
        assert_eq!(f.evaluate(&x, FeatureSubset::full(3), 0).unwrap(), m.predict(&x));
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            fixed_baseline_removal(sum_model(2), vec![0.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        let f = fixed_baseline_removal(sum_model(2), vec![0.0, 0.0]).unwrap();
        assert!(f.evaluate(&[1.0], FeatureSubset::empty(2), 0).is_err());
    }
}
