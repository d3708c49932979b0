//! Desk-scale model families and their versioned JSON form.

mod linear;
mod logistic;
mod table;
mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use linear::{fit_linear, LinearFitOptions, LinearModel, DEFAULT_RIDGE};
pub use logistic::{fit_logistic, fit_logistic_traced, LogisticFit, LogisticFitOptions, LogisticModel};
pub use table::{fit_subset_model_table, ModelFamily, SubsetModel, SubsetModelTable, MAX_TABLE_DIM};
pub use tree::{fit_tree, DecisionTreeModel, TreeFitOptions, TreeNode, TreeTask};

#[cfg(test)]
pub(crate) use logistic::sigmoid;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::model::PredictionModel;

pub const MODEL_FORMAT: &str = "rbexplain-model";
pub const MODEL_VERSION: u32 = 1;

/// Any fitted model this crate can train or load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AnyModel {
    Linear(LinearModel),
    Logistic(LogisticModel),
    Tree(DecisionTreeModel),
}

impl AnyModel {
    pub fn as_tree(&self) -> Option<&DecisionTreeModel> {
        match self {
            Self::Tree(t) => Some(t),
            _ => None,
        }
    }

    /// True for models whose outputs are class probabilities.
    pub fn is_classifier(&self) -> bool {
        match self {
            Self::Linear(_) => false,
            Self::Logistic(_) => true,
            Self::Tree(t) => t.out_dim() > 1,
        }
    }
}

impl PredictionModel for AnyModel {
    fn dim(&self) -> usize {
        match self {
            Self::Linear(m) => m.dim(),
            Self::Logistic(m) => m.dim(),
            Self::Tree(m) => m.dim(),
        }
    }
    fn out_dim(&self) -> usize {
        match self {
            Self::Linear(m) => m.out_dim(),
            Self::Logistic(m) => m.out_dim(),
            Self::Tree(m) => m.out_dim(),
        }
    }
    fn predict(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Linear(m) => m.predict(x),
            Self::Logistic(m) => m.predict(x),
            Self::Tree(m) => m.predict(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitFamily {
    Linear,
    Logistic,
    Tree,
    TreeClassifier,
}

impl FitFamily {
    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().replace('_', "-").as_str() {
            "linear" => Some(Self::Linear),
            "logistic" => Some(Self::Logistic),
            "tree" | "tree-regressor" => Some(Self::Tree),
            "tree-classifier" => Some(Self::TreeClassifier),
            _ => None,
        }
    }
}

/// Trains a model of the given family with default settings (trees: depth 4, min leaf 1).
pub fn fit_model(data: &LabeledDataset, family: FitFamily) -> Result<AnyModel> {
    if !data.has_labels() {
        return Err(Error::InvalidParameter("fitting needs a label column".into()));
    }
    let x = data.features();
    let y = data.labels();
    Ok(match family {
        FitFamily::Linear => AnyModel::Linear(fit_linear(x, y, LinearFitOptions::default())?),
        FitFamily::Logistic => AnyModel::Logistic(fit_logistic(x, y, LogisticFitOptions::default())?),
        FitFamily::Tree => AnyModel::Tree(fit_tree(x, y, TreeFitOptions::default())?),
        FitFamily::TreeClassifier => {
            let classes = data.class_count().ok_or_else(|| {
                Error::InvalidParameter("tree classifier needs integer class labels".into())
            })?;
            let opts = TreeFitOptions { task: TreeTask::Classification { classes }, ..Default::default() };
            AnyModel::Tree(fit_tree(x, y, opts)?)
        }
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    version: u32,
    model: AnyModel,
}

pub fn model_to_json(model: &AnyModel) -> Result<String> {
    let doc = ModelDocument { format: MODEL_FORMAT.into(), version: MODEL_VERSION, model: model.clone() };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn model_from_json(text: &str) -> Result<AnyModel> {
    let doc: ModelDocument = serde_json::from_str(text)?;
    if doc.format != MODEL_FORMAT {
        return Err(Error::InvalidParameter(format!("not a model document: format {:?}", doc.format)));
    }
    if doc.version != MODEL_VERSION {
        return Err(Error::InvalidParameter(format!("unsupported model version {}", doc.version)));
    }
    if let AnyModel::Tree(t) = &doc.model {
        t.validate()?;
    }
    Ok(doc.model)
}

pub fn save_model(path: impl AsRef<Path>, model: &AnyModel) -> Result<()> {
    std::fs::write(path, model_to_json(model)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<AnyModel> {
    model_from_json(&std::fs::read_to_string(path)?)
}
