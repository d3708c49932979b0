use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linear::{fit_linear, LinearFitOptions, LinearModel};
use super::logistic::{fit_logistic, LogisticFitOptions, LogisticModel};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::model::PredictionModel;
use crate::subset::{enumerate_subsets, FeatureSubset};

pub const MAX_TABLE_DIM: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    Linear,
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Fitted {
    Constant { output: Vec<f64> },
    Linear(LinearModel),
    Logistic(LogisticModel),
}

/// A model trained on the columns of one subset; it reads nothing else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetModel {
    dim: usize,
    columns: Vec<usize>,
    fitted: Fitted,
}

impl SubsetModel {
    pub fn columns(&self) -> &[usize] {
        &self.columns
    }
}

impl PredictionModel for SubsetModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn out_dim(&self) -> usize {
        match &self.fitted {
            Fitted::Constant { output } => output.len(),
            Fitted::Linear(_) => 1,
            Fitted::Logistic(_) => 2,
        }
    }

    fn predict(&self, x: &[f64]) -> Vec<f64> {
        let projected: Vec<f64> = self.columns.iter().map(|&j| x[j]).collect();
        match &self.fitted {
            Fitted::Constant { output } => output.clone(),
            Fitted::Linear(m) => m.predict(&projected),
            Fitted::Logistic(m) => m.predict(&projected),
        }
    }
}

/// One model per subset `S ⊆ D`, indexed by bitmask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetModelTable {
    dim: usize,
    family: ModelFamily,
    models: Vec<Option<SubsetModel>>,
}

impl SubsetModelTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> ModelFamily {
        self.family
    }

    pub fn len(&self) -> usize {
        self.models.iter().filter(|m| m.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, s: FeatureSubset) -> Result<&SubsetModel> {
        self.models
            .get(s.bits() as usize)
            .and_then(Option::as_ref)
            .ok_or(Error::MissingSubsetModel { subset: s.bits() })
    }

    /// Drops the model for `s`; used to exercise the missing-model path.
    pub fn remove(&mut self, s: FeatureSubset) {
        if let Some(slot) = self.models.get_mut(s.bits() as usize) {
            *slot = None;
        }
    }

    pub fn full_model(&self) -> Result<&SubsetModel> {
        self.get(FeatureSubset::full(self.dim))
    }
}

fn fit_one(data: &LabeledDataset, s: FeatureSubset, family: ModelFamily) -> Result<SubsetModel> {
    let columns = s.to_vec();
    let labels = data.labels();
    let n = labels.len() as f64;
    let fitted = if columns.is_empty() {
        let mean = labels.iter().sum::<f64>() / n;
        match family {
            ModelFamily::Linear => Fitted::Constant { output: vec![mean] },
            ModelFamily::Logistic => Fitted::Constant { output: vec![1.0 - mean, mean] },
        }
    } else {
        let x = data.features().select_columns(&columns);
        match family {
            ModelFamily::Linear => Fitted::Linear(fit_linear(&x, labels, LinearFitOptions::default())?),
            ModelFamily::Logistic => Fitted::Logistic(fit_logistic(&x, labels, LogisticFitOptions::default())?),
        }
    };
    Ok(SubsetModel { dim: data.dim(), columns, fitted })
}

/// Fits `f_S` on the columns of every `S ⊆ D`; `f_{}` predicts the label mean
/// (regression) or class proportions (classification).
pub fn fit_subset_model_table(data: &LabeledDataset, family: ModelFamily) -> Result<SubsetModelTable> {
    let d = data.dim();
    if d > MAX_TABLE_DIM {
        return Err(Error::DimensionTooLarge { dim: d, max: MAX_TABLE_DIM });
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if family == ModelFamily::Logistic && data.labels().iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(Error::NonBinaryLabels);
    }
    let subsets: Vec<_> = enumerate_subsets(d)?.collect();
    let models = subsets
        .par_iter()
        .map(|&s| fit_one(data, s, family).map(Some))
        .collect::<Result<Vec<_>>>()?;
    Ok(SubsetModelTable { dim: d, family, models })
}
