use std::sync::Arc;

use crate::error::Result;
use crate::model::{PredictionModel, SharedModel};
use crate::models::SubsetModelTable;
use crate::subset::{enumerate_subsets, FeatureSubset};
use crate::subset_fn::{check_input, SubsetFunction};

/// `F(x, S) = f_S(x_S)` from a table of per-subset models.
pub struct SeparateModelsRemoval {
    table: Arc<SubsetModelTable>,
    full: SharedModel,
}

pub fn separate_models_removal(table: SubsetModelTable) -> Result<SeparateModelsRemoval> {
    for s in enumerate_subsets(table.dim())? {
        table.get(s)?;
    }
    let full: SharedModel = Arc::new(table.full_model()?.clone());
    Ok(SeparateModelsRemoval { table: Arc::new(table), full })
}

impl SeparateModelsRemoval {
    pub fn table(&self) -> &SubsetModelTable {
        &self.table
    }
}

impl SubsetFunction for SeparateModelsRemoval {
    fn dim(&self) -> usize {
        self.table.dim()
    }
    fn out_dim(&self) -> usize {
        self.full.out_dim()
    }
    fn evaluate(&self, x: &[f64], s: FeatureSubset, _seed: u64) -> Result<Vec<f64>> {
        check_input(self, x, s)?;
        if s.is_full() {
            return Ok(self.full.predict(x));
        }
        Ok(self.table.get(s)?.predict(x))
    }
    fn extension_of(&self) -> Option<&SharedModel> {
        Some(&self.full)
    }
    fn name(&self) -> &'static str {
        "separate-models"
    }
}
