use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{PredictionModel, SharedModel};
use crate::models::{DecisionTreeModel, TreeNode};
use crate::subset::FeatureSubset;
use crate::subset_fn::{check_input, SubsetFunction};

/// Splits on removed features average both branches by training coverage.
pub struct TreeDistributionRemoval {
    tree: Arc<DecisionTreeModel>,
    shared: SharedModel,
}

pub fn tree_distribution_removal(tree: DecisionTreeModel) -> Result<TreeDistributionRemoval> {
    if let Some(node) = tree.nodes().iter().position(|n| n.coverage().is_none()) {
        return Err(Error::MissingCoverage { node });
    }
    for (i, n) in tree.nodes().iter().enumerate() {
        if let TreeNode::Split { left, right, .. } = n {
            if tree.nodes()[*left].coverage().unwrap() + tree.nodes()[*right].coverage().unwrap() == 0 {
                return Err(Error::InvalidParameter(format!("split node {i} has no training rows below it")));
            }
        }
    }
    let tree = Arc::new(tree);
    let shared: SharedModel = tree.clone();
    Ok(TreeDistributionRemoval { tree, shared })
}

impl TreeDistributionRemoval {
    pub fn tree(&self) -> &DecisionTreeModel {
        &self.tree
    }

    fn walk(&self, i: usize, x: &[f64], s: FeatureSubset, out: &mut [f64], weight: f64) {
        match &self.tree.nodes()[i] {
            TreeNode::Leaf { value, .. } => {
                for (o, v) in out.iter_mut().zip(value) {
                    *o += weight * v;
                }
            }
            TreeNode::Split { feature, threshold, left, right, .. } => {
                if s.contains(*feature) {
                    let next = if x[*feature] <= *threshold { *left } else { *right };
                    self.walk(next, x, s, out, weight);
                } else {
                    let nodes = self.tree.nodes();
                    let cl = nodes[*left].coverage().unwrap() as f64;
                    let cr = nodes[*right].coverage().unwrap() as f64;
                    let total = cl + cr;
                    if cl > 0.0 {
                        self.walk(*left, x, s, out, weight * cl / total);
                    }
                    if cr > 0.0 {
                        self.walk(*right, x, s, out, weight * cr / total);
                    }
                }
            }
        }
    }
}

impl SubsetFunction for TreeDistributionRemoval {
    fn dim(&self) -> usize {
        self.tree.dim()
    }
    fn out_dim(&self) -> usize {
        self.tree.out_dim()
    }
    fn evaluate(&self, x: &[f64], s: FeatureSubset, _seed: u64) -> Result<Vec<f64>> {
        check_input(self, x, s)?;
        if s.is_full() {
            return Ok(self.tree.predict(x));
        }
        let mut out = vec![0.0; self.out_dim()];
        self.walk(0, x, s, &mut out, 1.0);
        Ok(out)
    }
    fn extension_of(&self) -> Option<&SharedModel> {
        Some(&self.shared)
    }
    fn name(&self) -> &'static str {
        "tree-distribution"
    }
}
