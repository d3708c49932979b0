//! CART-style decision trees that record how many training rows reach each node.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::PredictionModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TreeNode {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        coverage: Option<u64>,
    },
    Leaf {
        value: Vec<f64>,
        coverage: Option<u64>,
    },
}

impl TreeNode {
    pub fn coverage(&self) -> Option<u64> {
        match self {
            Self::Split { coverage, .. } | Self::Leaf { coverage, .. } => *coverage,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "task")]
pub enum TreeTask {
    Regression,
    Classification { classes: usize },
}

/// Flat tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTreeModel {
    dim: usize,
    out_dim: usize,
    nodes: Vec<TreeNode>,
}

impl DecisionTreeModel {
    pub fn new(dim: usize, out_dim: usize, nodes: Vec<TreeNode>) -> Result<Self> {
        let tree = Self { dim, out_dim, nodes };
        tree.validate()?;
        Ok(tree)
    }

    /// Structural checks: indices in range, leaf widths, coverage sums where recorded.
    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::InvalidParameter("tree has no nodes".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            match node {
                TreeNode::Split { feature, left, right, coverage, .. } => {
                    if *feature >= self.dim {
                        return Err(Error::IndexOutOfRange { index: *feature, len: self.dim });
                    }
                    for &c in [left, right] {
                        if c <= i || c >= self.nodes.len() {
                            return Err(Error::InvalidParameter(format!("node {i} has invalid child {c}")));
                        }
                    }
                    if let (Some(p), Some(l), Some(r)) = (coverage, self.nodes[*left].coverage(), self.nodes[*right].coverage()) {
                        if l + r != *p {
                            return Err(Error::InvalidParameter(format!(
                                "node {i}: children coverage {l} + {r} != {p}"
                            )));
                        }
                    }
                }
                TreeNode::Leaf { value, .. } => {
                    if value.len() != self.out_dim {
                        return Err(Error::DimensionMismatch { expected: self.out_dim, got: value.len() });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    fn leaf_for(&self, x: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Split { feature, threshold, left, right, .. } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
                TreeNode::Leaf { value, .. } => return value,
            }
        }
    }
}

impl PredictionModel for DecisionTreeModel {
    fn dim(&self) -> usize {
        self.dim
    }
    fn out_dim(&self) -> usize {
        self.out_dim
    }
    fn predict(&self, x: &[f64]) -> Vec<f64> {
        self.leaf_for(x).to_vec()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TreeFitOptions {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub task: TreeTask,
}

impl Default for TreeFitOptions {
    fn default() -> Self {
        Self { max_depth: 4, min_leaf: 1, task: TreeTask::Regression }
    }
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [f64],
    opts: TreeFitOptions,
    nodes: Vec<TreeNode>,
}

/// Impurity accumulator: sum of squared error or coverage-weighted Gini.
#[derive(Clone)]
enum Stats {
    Sse { n: f64, sum: f64, sum_sq: f64 },
    Gini { n: f64, counts: Vec<f64> },
}

impl Stats {
    fn new(task: TreeTask) -> Self {
        match task {
            TreeTask::Regression => Self::Sse { n: 0.0, sum: 0.0, sum_sq: 0.0 },
            TreeTask::Classification { classes } => Self::Gini { n: 0.0, counts: vec![0.0; classes] },
        }
    }

    fn add(&mut self, y: f64, sign: f64) {
        match self {
            Self::Sse { n, sum, sum_sq } => {
                *n += sign;
                *sum += sign * y;
                *sum_sq += sign * y * y;
            }
            Self::Gini { n, counts } => {
                *n += sign;
                counts[y as usize] += sign;
            }
        }
    }

    fn impurity(&self) -> f64 {
        match self {
            Self::Sse { n, sum, sum_sq } => {
                if *n == 0.0 {
                    0.0
                } else {
                    (sum_sq - sum * sum / n).max(0.0)
                }
            }
            Self::Gini { n, counts } => {
                if *n == 0.0 {
                    0.0
                } else {
                    n - counts.iter().map(|c| c * c).sum::<f64>() / n
                }
            }
        }
    }

    fn leaf_value(&self) -> Vec<f64> {
        match self {
            Self::Sse { n, sum, .. } => vec![sum / n],
            Self::Gini { n, counts } => counts.iter().map(|c| c / n).collect(),
        }
    }
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl Builder<'_> {
    fn stats(&self, rows: &[usize]) -> Stats {
        let mut s = Stats::new(self.opts.task);
        for &r in rows {
            s.add(self.y[r], 1.0);
        }
        s
    }

    fn best_split(&self, rows: &[usize], total: &Stats) -> Option<Split> {
        let min_leaf = self.opts.min_leaf.max(1);
        let mut best: Option<Split> = None;
        let mut order = rows.to_vec();
        for j in 0..self.x.ncols() {
            order.sort_by(|&a, &b| self.x.get(a, j).total_cmp(&self.x.get(b, j)));
            let mut left = Stats::new(self.opts.task);
            let mut right = total.clone();
            for k in 0..order.len() - 1 {
                let y = self.y[order[k]];
                left.add(y, 1.0);
                right.add(y, -1.0);
                let (lo, hi) = (self.x.get(order[k], j), self.x.get(order[k + 1], j));
                if lo == hi || k + 1 < min_leaf || order.len() - k - 1 < min_leaf {
                    continue;
                }
                let impurity = left.impurity() + right.impurity();
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    best = Some(Split { feature: j, threshold: 0.5 * (lo + hi), impurity });
                }
            }
        }
        best
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let total = self.stats(&rows);
        let id = self.nodes.len();
        let coverage = Some(rows.len() as u64);
        self.nodes.push(TreeNode::Leaf { value: total.leaf_value(), coverage });
        if depth >= self.opts.max_depth || rows.len() < 2 * self.opts.min_leaf.max(1) {
            return id;
        }
        let parent = total.impurity();
        let Some(split) = self.best_split(&rows, &total) else { return id };
        if split.impurity >= parent - 1e-12 * parent.max(1.0) {
            return id;
        }
        let (l, r): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| self.x.get(i, split.feature) <= split.threshold);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = TreeNode::Split { feature: split.feature, threshold: split.threshold, left, right, coverage };
        id
    }
}

/// Greedy CART: squared error for regression, Gini for classification.
///
/// Thresholds are midpoints between consecutive distinct values; ties in impurity
/// go to the lowest feature index, then the lowest threshold.
pub fn fit_tree(features: &Matrix, labels: &[f64], opts: TreeFitOptions) -> Result<DecisionTreeModel> {
    let n = features.nrows();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: labels.len() });
    }
    if n < opts.min_leaf {
        return Err(Error::InvalidParameter(format!("{n} rows cannot fill a leaf of {}", opts.min_leaf)));
    }
    let out_dim = match opts.task {
        TreeTask::Regression => 1,
        TreeTask::Classification { classes } => {
            if let Some(&bad) = labels.iter().find(|&&y| y < 0.0 || y.fract() != 0.0 || y as usize >= classes) {
                return Err(Error::InvalidParameter(format!("label {bad} is not a class index below {classes}")));
            }
            classes
        }
    };
    let mut b = Builder { x: features, y: labels, opts, nodes: Vec::new() };
    b.build((0..n).collect(), 0);
    DecisionTreeModel::new(features.ncols(), out_dim, b.nodes)
}
