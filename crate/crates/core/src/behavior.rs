//! Set functions `u: P(D) -> R` built from a subset function, and the losses
//! and links they use.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{validate_distribution, LabeledDataset};
use crate::error::{Error, Result};
use crate::game::SetFunction;
use crate::rng::row_seed;
use crate::subset::{enumerate_subsets, FeatureSubset};
use crate::subset_fn::SharedSubsetFunction;

pub const DEFAULT_CLIP: f64 = 1e-12;

/// Largest `d` for which the identity checks enumerate every subset.
pub const MAX_IDENTITY_DIM: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    SquaredError,
    CrossEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossFunction {
    pub kind: LossKind,
    pub clip_epsilon: f64,
}

impl LossFunction {
    pub fn squared_error() -> Self {
        Self { kind: LossKind::SquaredError, clip_epsilon: DEFAULT_CLIP }
    }

    pub fn cross_entropy() -> Self {
        Self { kind: LossKind::CrossEntropy, clip_epsilon: DEFAULT_CLIP }
    }

    #[inline]
    fn clamp(&self, p: f64) -> f64 {
        p.clamp(self.clip_epsilon, 1.0 - self.clip_epsilon)
    }

    /// `ℓ(prediction, target)` over whole output vectors.
    ///
    /// Squared error sums over coordinates. Cross entropy is `−Σ t log p`; a
    /// single output is read as `P(y = 1)`.
    pub fn loss(&self, pred: &[f64], target: &[f64]) -> f64 {
        match self.kind {
            LossKind::SquaredError => pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum(),
            LossKind::CrossEntropy => {
                if pred.len() == 1 {
                    let p = self.clamp(pred[0]);
                    let t = target[0];
                    -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
                } else {
                    -pred
                        .iter()
                        .zip(target)
                        .filter(|(_, &t)| t != 0.0)
                        .map(|(&p, &t)| t * self.clamp(p).ln())
                        .sum::<f64>()
                }
            }
        }
    }

    /// Target vector for label `y` against an output of width `out_dim`:
    /// one-hot for multi-output models, `[y]` otherwise.
    pub fn target(&self, y: f64, out_dim: usize) -> Result<Vec<f64>> {
        if out_dim == 1 {
            if self.kind == LossKind::CrossEntropy && !(0.0..=1.0).contains(&y) {
                return Err(Error::InvalidParameter(format!("label {y} is not a probability")));
            }
            return Ok(vec![y]);
        }
        if y < 0.0 || y.fract() != 0.0 || y as usize >= out_dim {
            return Err(Error::InvalidParameter(format!("label {y} is not a class index below {out_dim}")));
        }
        let mut t = vec![0.0; out_dim];
        t[y as usize] = 1.0;
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkFunction {
    Identity,
    LogOdds,
}

impl LinkFunction {
    pub fn apply(self, p: f64) -> f64 {
        match self {
            Self::Identity => p,
            Self::LogOdds => {
                let p = p.clamp(DEFAULT_CLIP, 1.0 - DEFAULT_CLIP);
                (p / (1.0 - p)).ln()
            }
        }
    }
}

/// The five model behaviors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BehaviorKind {
    Prediction,
    PredictionLoss,
    PredictionMeanLoss,
    DatasetLossLabel,
    DatasetLossOutput,
}

impl BehaviorKind {
    pub const ALL: [BehaviorKind; 5] = [
        Self::Prediction,
        Self::PredictionLoss,
        Self::PredictionMeanLoss,
        Self::DatasetLossLabel,
        Self::DatasetLossOutput,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Self::Prediction => "prediction",
            Self::PredictionLoss => "prediction loss",
            Self::PredictionMeanLoss => "prediction mean loss",
            Self::DatasetLossLabel => "dataset loss (label)",
            Self::DatasetLossOutput => "dataset loss (output)",
        }
    }

    /// Dataset-level behaviors explain the model rather than one input.
    pub fn is_dataset_level(self) -> bool {
        matches!(self, Self::DatasetLossLabel | Self::DatasetLossOutput)
    }
}

fn check_x(f: &SharedSubsetFunction, x: &[f64]) -> Result<()> {
    if x.len() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: x.len() });
    }
    Ok(())
}

/// `u(S) = link(F(x, S)[k])`.
pub fn behavior_prediction(
    f: SharedSubsetFunction,
    x: Vec<f64>,
    output_index: usize,
    link: LinkFunction,
    seed: u64,
) -> Result<SetFunction> {
    check_x(&f, &x)?;
    if output_index >= f.out_dim() {
        return Err(Error::IndexOutOfRange { index: output_index, len: f.out_dim() });
    }
    let d = f.dim();
    Ok(SetFunction::new(d, move |s| Ok(link.apply(f.evaluate(&x, s, seed)?[output_index]))))
}

/// `u(S) = −ℓ(F(x, S), y)`.
pub fn behavior_prediction_loss(
    f: SharedSubsetFunction,
    x: Vec<f64>,
    y: f64,
    loss: LossFunction,
    seed: u64,
) -> Result<SetFunction> {
    check_x(&f, &x)?;
    let target = loss.target(y, f.out_dim())?;
    let d = f.dim();
    Ok(SetFunction::new(d, move |s| Ok(-loss.loss(&f.evaluate(&x, s, seed)?, &target))))
}

fn weighted_loss_game(
    f: SharedSubsetFunction,
    x: Vec<f64>,
    targets: Vec<(f64, Vec<f64>)>,
    loss: LossFunction,
    seed: u64,
) -> SetFunction {
    let d = f.dim();
    SetFunction::new(d, move |s| {
        let pred = f.evaluate(&x, s, seed)?;
        Ok(-targets.iter().map(|(w, t)| w * loss.loss(&pred, t)).sum::<f64>())
    })
}

/// `u(S) = −Σ_y p(y | x) ℓ(F(x, S), y)` over classes `0..c`.
pub fn behavior_prediction_mean_loss(
    f: SharedSubsetFunction,
    x: Vec<f64>,
    label_dist: &[f64],
    loss: LossFunction,
    seed: u64,
) -> Result<SetFunction> {
    check_x(&f, &x)?;
    validate_distribution(label_dist)?;
    let targets = label_dist
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(c, &p)| Ok((p, loss.target(c as f64, f.out_dim())?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(weighted_loss_game(f, x, targets, loss, seed))
}

struct Rows {
    x: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
}

fn dataset_rows(f: &SharedSubsetFunction, data: &LabeledDataset, loss: &LossFunction, labels: bool) -> Result<Rows> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: data.dim() });
    }
    let x: Vec<Vec<f64>> = (0..data.len()).map(|i| data.row(i).to_vec()).collect();
    let targets = if labels {
        if !data.has_labels() {
            return Err(Error::InvalidParameter("dataset has no labels".into()));
        }
        data.labels().iter().map(|&y| loss.target(y, f.out_dim())).collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    Ok(Rows { x, targets })
}

/// `u(S) = −(1/n) Σ_i ℓ(F(x_i, S), y_i)`; row `i` uses its own derived seed.
pub fn behavior_dataset_loss_label(
    f: SharedSubsetFunction,
    data: &LabeledDataset,
    loss: LossFunction,
    seed: u64,
) -> Result<SetFunction> {
    let rows = Arc::new(dataset_rows(&f, data, &loss, true)?);
    let d = f.dim();
    Ok(SetFunction::new(d, move |s| {
        let mut total = 0.0;
        for (i, (x, t)) in rows.x.iter().zip(&rows.targets).enumerate() {
            total += loss.loss(&f.evaluate(x, s, row_seed(seed, i))?, t);
        }
        Ok(-total / rows.x.len() as f64)
    }))
}

/// `u(S) = −(1/n) Σ_i ℓ(F(x_i, S), F(x_i, D))`.
pub fn behavior_dataset_loss_output(
    f: SharedSubsetFunction,
    data: &LabeledDataset,
    loss: LossFunction,
    seed: u64,
) -> Result<SetFunction> {
    if f.extension_of().is_none() {
        return Err(Error::PreconditionViolation("subset function does not extend a model".into()));
    }
    let rows = dataset_rows(&f, data, &loss, false)?;
    let full = FeatureSubset::full(f.dim());
    let outputs: Vec<Vec<f64>> = rows
        .x
        .iter()
        .enumerate()
        .map(|(i, x)| f.evaluate(x, full, row_seed(seed, i)))
        .collect::<Result<_>>()?;
    let rows = Arc::new(Rows { x: rows.x, targets: outputs });
    let d = f.dim();
    Ok(SetFunction::new(d, move |s| {
        let mut total = 0.0;
        for (i, (x, t)) in rows.x.iter().zip(&rows.targets).enumerate() {
            total += loss.loss(&f.evaluate(x, s, row_seed(seed, i))?, t);
        }
        Ok(-total / rows.x.len() as f64)
    }))
}

/// Largest absolute gaps found by [`verify_behavior_identities`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityReport {
    /// `v_xy(S)` against `−ℓ(v_x(S), y)`.
    pub prediction_loss: f64,
    /// `w_x(S)` against `Σ_y p(y | x) v_xy(S)`.
    pub mean_loss: f64,
    /// `v(S)` against the row mean of `v_xy(S)`.
    pub dataset_label: f64,
    /// `E_XY[v_XY(S)]` against `E_X[w_X(S)]` with point-mass label distributions.
    pub dataset_label_via_mean_loss: f64,
    /// `w(S)` against `−mean ℓ(v_x(S), v_x(D))`.
    pub dataset_output: f64,
    pub subsets_checked: usize,
}

impl IdentityReport {
    pub fn max_discrepancy(&self) -> f64 {
        [
            self.prediction_loss,
            self.mean_loss,
            self.dataset_label,
            self.dataset_label_via_mean_loss,
            self.dataset_output,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.max_discrepancy() <= tol
    }
}

fn gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

/// Recomputes each behavior from raw subset-function outputs and compares it
/// with the corresponding set function, over every subset.
pub fn verify_behavior_identities(
    f: SharedSubsetFunction,
    data: &LabeledDataset,
    loss: LossFunction,
    seed: u64,
) -> Result<IdentityReport> {
    let d = f.dim();
    if d > MAX_IDENTITY_DIM {
        return Err(Error::DimensionTooLarge { dim: d, max: MAX_IDENTITY_DIM });
    }
    let rows = dataset_rows(&f, data, &loss, true)?;
    let n = rows.x.len();
    let out_dim = f.out_dim();
    let subsets: Vec<FeatureSubset> = enumerate_subsets(d)?.collect();
    let full = FeatureSubset::full(d);

    let mut report = IdentityReport {
        prediction_loss: 0.0,
        mean_loss: 0.0,
        dataset_label: 0.0,
        dataset_label_via_mean_loss: 0.0,
        dataset_output: 0.0,
        subsets_checked: subsets.len(),
    };

    // raw[i][s] = F(x_i, S) with the row's seed
    let mut raw: Vec<Vec<Vec<f64>>> = Vec::with_capacity(n);
    let mut v_xy: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut w_point: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (i, x) in rows.x.iter().enumerate() {
        let rs = row_seed(seed, i);
        let y = data.labels()[i];
        let outs: Vec<Vec<f64>> = subsets.iter().map(|&s| f.evaluate(x, s, rs)).collect::<Result<_>>()?;

        let game = behavior_prediction_loss(f.clone(), x.clone(), y, loss, rs)?;
        let vals = game.values(&subsets)?;
        for (v, o) in vals.iter().zip(&outs) {
            report.prediction_loss = report.prediction_loss.max(gap(*v, -loss.loss(o, &rows.targets[i])));
        }

        let point = weighted_loss_game(f.clone(), x.clone(), vec![(1.0, rows.targets[i].clone())], loss, rs);
        let wp = point.values(&subsets)?;

        if let Some(dist) = data.label_distributions() {
            let w = behavior_prediction_mean_loss(f.clone(), x.clone(), &dist[i], loss, rs)?;
            let wv = w.values(&subsets)?;
            for (k, o) in outs.iter().enumerate() {
                let mut expect = 0.0;
                for (c, &p) in dist[i].iter().enumerate() {
                    if p > 0.0 {
                        expect += p * -loss.loss(o, &loss.target(c as f64, out_dim)?);
                    }
                }
                report.mean_loss = report.mean_loss.max(gap(wv[k], expect));
            }
        } else {
            for (a, b) in wp.iter().zip(&vals) {
                report.mean_loss = report.mean_loss.max(gap(*a, *b));
            }
        }

        raw.push(outs);
        v_xy.push(vals);
        w_point.push(wp);
    }

    let v = behavior_dataset_loss_label(f.clone(), data, loss, seed)?.values(&subsets)?;
    let w = behavior_dataset_loss_output(f.clone(), data, loss, seed);
    let full_idx = full.bits() as usize;
    for (k, _) in subsets.iter().enumerate() {
        let mean_vxy = v_xy.iter().map(|r| r[k]).sum::<f64>() / n as f64;
        let mean_wx = w_point.iter().map(|r| r[k]).sum::<f64>() / n as f64;
        report.dataset_label = report.dataset_label.max(gap(v[k], mean_vxy));
        report.dataset_label_via_mean_loss = report.dataset_label_via_mean_loss.max(gap(mean_vxy, mean_wx));
    }
    if let Ok(w) = w {
        let wv = w.values(&subsets)?;
        for (k, _) in subsets.iter().enumerate() {
            let expect = -raw.iter().map(|r| loss.loss(&r[k], &r[full_idx])).sum::<f64>() / n as f64;
            report.dataset_output = report.dataset_output.max(gap(wv[k], expect));
        }
    }
    Ok(report)
}
