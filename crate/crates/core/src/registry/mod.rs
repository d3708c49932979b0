//! Named methods as (removal, behavior, summary) triples, and the grid they live on.

mod report;
mod run;

pub use report::{explain_report, grid_report, REPORT_FORMAT};

pub use run::{instantiate_removal, run_method, ExplainContext, RunOutcome, DEFAULT_REMOVAL_SAMPLES, DEFAULT_SAMPLES};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::behavior::{BehaviorKind, LinkFunction, LossKind};
use crate::error::{Error, Result};
use crate::models::ModelFamily;
use crate::summary::{KernelWeights, Regularizer, Solver};

/// Removal choices as tabulated, including those with no tabular implementation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemovalLabel {
    Zeros,
    DefaultValues,
    MissingnessDuringTraining,
    ExtendPixelValues,
    Blurring,
    GenerativeModel,
    SeparateModels,
    MarginalizeUniform,
    MarginalizeProduct,
    MarginalizeConditional,
    MarginalizeMarginal,
    MarginalizeReplacement,
    TreeDistribution,
}

impl RemovalLabel {
    pub const ALL: [RemovalLabel; 13] = [
        Self::Zeros,
        Self::DefaultValues,
        Self::MissingnessDuringTraining,
        Self::ExtendPixelValues,
        Self::Blurring,
        Self::GenerativeModel,
        Self::SeparateModels,
        Self::MarginalizeUniform,
        Self::MarginalizeProduct,
        Self::MarginalizeConditional,
        Self::MarginalizeMarginal,
        Self::MarginalizeReplacement,
        Self::TreeDistribution,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Self::Zeros => "zeros",
            Self::DefaultValues => "default values",
            Self::MissingnessDuringTraining => "missingness during training",
            Self::ExtendPixelValues => "extend pixel values",
            Self::Blurring => "blurring",
            Self::GenerativeModel => "generative model",
            Self::SeparateModels => "separate models",
            Self::MarginalizeUniform => "marginalize (uniform)",
            Self::MarginalizeProduct => "marginalize (marginals product)",
            Self::MarginalizeConditional => "marginalize (conditional)",
            Self::MarginalizeMarginal => "marginalize (marginal)",
            Self::MarginalizeReplacement => "marginalize (replacement dist.)",
            Self::TreeDistribution => "tree distribution",
        }
    }

    /// Whether some implemented strategy realizes this label directly.
    pub fn is_implemented(self) -> bool {
        !matches!(
            self,
            Self::MissingnessDuringTraining | Self::ExtendPixelValues | Self::Blurring | Self::GenerativeModel
        )
    }

    /// Zeros are a particular choice of default values, so the two count as one removal choice
    /// when comparing methods.
    fn family(self) -> Self {
        match self {
            Self::Zeros => Self::DefaultValues,
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SummaryLabel {
    RemoveIndividual,
    IncludeIndividual,
    ShapleyValue,
    LinearModel,
    MeanWhenIncluded,
    LowValueSubset,
    HighValueSubset,
    PartitionedSubsets,
}

impl SummaryLabel {
    pub const ALL: [SummaryLabel; 8] = [
        Self::RemoveIndividual,
        Self::IncludeIndividual,
        Self::ShapleyValue,
        Self::LinearModel,
        Self::MeanWhenIncluded,
        Self::LowValueSubset,
        Self::HighValueSubset,
        Self::PartitionedSubsets,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Self::RemoveIndividual => "remove individual",
            Self::IncludeIndividual => "include individual",
            Self::ShapleyValue => "Shapley value",
            Self::LinearModel => "linear model",
            Self::MeanWhenIncluded => "mean when included",
            Self::LowValueSubset => "low-value subset",
            Self::HighValueSubset => "high-value subset",
            Self::PartitionedSubsets => "partitioned subsets",
        }
    }
}

/// A cell of the removal × behavior × summary grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridPosition {
    pub removal: RemovalLabel,
    pub behavior: BehaviorKind,
    pub summary: SummaryLabel,
}

impl fmt::Display for GridPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.removal.label(), self.behavior.label(), self.summary.label())
    }
}

/// An implemented removal strategy with its parameters. `None` means "choose a default from the data".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "strategy")]
pub enum RemovalStrategy {
    Zeros,
    /// Fixed baseline; column means of the data when `values` is unset.
    DefaultValues { values: Option<Vec<f64>> },
    /// `samples = None` averages over every background row.
    Marginal { samples: Option<usize> },
    ProductOfMarginals { samples: Option<usize> },
    Uniform { samples: Option<usize> },
    Replacement { samples: Option<usize>, bins: Option<usize> },
    /// Gaussian fitted to the data; `samples = None` plugs in the conditional mean.
    ConditionalGaussian { samples: Option<usize> },
    ConditionalEmpirical,
    TreeDistribution,
    SeparateModels { family: Option<ModelFamily> },
}

impl RemovalStrategy {
    pub fn id(&self) -> &'static str {
        match self {
            Self::Zeros => "zeros",
            Self::DefaultValues { .. } => "default-values",
            Self::Marginal { .. } => "marginal",
            Self::ProductOfMarginals { .. } => "product-of-marginals",
            Self::Uniform { .. } => "uniform",
            Self::Replacement { .. } => "replacement",
            Self::ConditionalGaussian { .. } => "conditional-gaussian",
            Self::ConditionalEmpirical => "conditional-empirical",
            Self::TreeDistribution => "tree-distribution",
            Self::SeparateModels { .. } => "separate-models",
        }
    }

    pub fn label(&self) -> RemovalLabel {
        match self {
            Self::Zeros => RemovalLabel::Zeros,
            Self::DefaultValues { .. } => RemovalLabel::DefaultValues,
            Self::Marginal { .. } => RemovalLabel::MarginalizeMarginal,
            Self::ProductOfMarginals { .. } => RemovalLabel::MarginalizeProduct,
            Self::Uniform { .. } => RemovalLabel::MarginalizeUniform,
            Self::Replacement { .. } => RemovalLabel::MarginalizeReplacement,
            Self::ConditionalGaussian { .. } | Self::ConditionalEmpirical => RemovalLabel::MarginalizeConditional,
            Self::TreeDistribution => RemovalLabel::TreeDistribution,
            Self::SeparateModels { .. } => RemovalLabel::SeparateModels,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorSpec {
    pub kind: BehaviorKind,
    /// Output explained by the prediction behavior; the predicted class for classifiers
    /// and the last output otherwise when unset.
    pub output_index: Option<usize>,
    pub link: LinkFunction,
    /// Cross entropy for classifiers and squared error otherwise when unset.
    pub loss: Option<LossKind>,
}

impl BehaviorSpec {
    pub fn new(kind: BehaviorKind) -> Self {
        let loss = (kind == BehaviorKind::DatasetLossOutput).then_some(LossKind::SquaredError);
        Self { kind, output_index: None, link: LinkFunction::Identity, loss }
    }

    pub fn with_link(mut self, link: LinkFunction) -> Self {
        self.link = link;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapleySolver {
    /// Exact for small `d`, permutation sampling otherwise.
    Auto,
    Exact,
    Permutation,
    KernelRegression,
}

/// Largest `d` the automatic choices solve by full enumeration.
pub const AUTO_EXACT_DIM: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "objective")]
pub enum HighValueObjective {
    /// `argmax u(S)` with `|S| = k`; half the features when unset.
    Cardinality { k: Option<usize> },
    /// Smallest `S` with `u(S) ≥ t`.
    Threshold { t: f64 },
    /// Smallest `S` with `u(S) ≥ u(D) − (1 − fraction) · |u(D)|`.
    RelativeThreshold { fraction: f64 },
    /// `argmax u(S) − λ|S|`.
    Regularized { lambda: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "summary")]
pub enum SummarySpec {
    RemoveIndividual { normalize: bool },
    IncludeIndividual,
    Shapley { solver: ShapleySolver, samples: Option<usize> },
    LinearModel { kernel: KernelWeights, regularizer: Regularizer, samples: Option<usize> },
    MeanWhenIncluded { p: f64, samples: Option<usize> },
    LowValueSubset { lambda: f64, solver: Solver },
    HighValueSubset { objective: HighValueObjective, solver: Solver },
    PartitionedSubsets { lambda: f64, gamma: f64, solver: Solver },
}

impl SummarySpec {
    pub fn label(&self) -> SummaryLabel {
        match self {
            Self::RemoveIndividual { .. } => SummaryLabel::RemoveIndividual,
            Self::IncludeIndividual => SummaryLabel::IncludeIndividual,
            Self::Shapley { .. } => SummaryLabel::ShapleyValue,
            Self::LinearModel { .. } => SummaryLabel::LinearModel,
            Self::MeanWhenIncluded { .. } => SummaryLabel::MeanWhenIncluded,
            Self::LowValueSubset { .. } => SummaryLabel::LowValueSubset,
            Self::HighValueSubset { .. } => SummaryLabel::HighValueSubset,
            Self::PartitionedSubsets { .. } => SummaryLabel::PartitionedSubsets,
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Self::RemoveIndividual { .. } => "remove-individual",
            Self::IncludeIndividual => "include-individual",
            Self::Shapley { .. } => "shapley",
            Self::LinearModel { .. } => "linear-model",
            Self::MeanWhenIncluded { .. } => "mean-when-included",
            Self::LowValueSubset { .. } => "low-value-subset",
            Self::HighValueSubset { .. } => "high-value-subset",
            Self::PartitionedSubsets { .. } => "partitioned-subsets",
        }
    }

    fn shapley() -> Self {
        Self::Shapley { solver: ShapleySolver::Auto, samples: None }
    }
}

/// One removal-based explanation method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub name: Option<String>,
    /// Where the method sits on the grid; for substituted presets this is the
    /// tabulated removal, not the executed one.
    pub position: GridPosition,
    pub removal: RemovalStrategy,
    pub behavior: BehaviorSpec,
    pub summary: SummarySpec,
    pub substituted: bool,
    pub substitution_note: Option<String>,
}

impl MethodSpec {
    /// An explicit triple; its grid position follows from the components.
    pub fn custom(removal: RemovalStrategy, behavior: BehaviorSpec, summary: SummarySpec) -> Self {
        let position = GridPosition { removal: removal.label(), behavior: behavior.kind, summary: summary.label() };
        Self { name: None, position, removal, behavior, summary, substituted: false, substitution_note: None }
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            format!("{}/{}/{}", self.removal.id(), self.behavior.kind.label(), self.summary.id())
        })
    }

    fn named(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    fn substitute(mut self, label: RemovalLabel, note: &str) -> Self {
        self.position.removal = label;
        self.substituted = true;
        self.substitution_note = Some(note.to_string());
        self
    }
}

/// Lowercase with every non-alphanumeric character dropped.
pub fn normalize_name(name: &str) -> String {
    name.chars().filter(char::is_ascii_alphanumeric).map(|c| c.to_ascii_lowercase()).collect()
}

const MP_NOTE: &str = "blurring has no tabular analogue; fixed baseline at the column means";
const MIR_NOTE: &str = "pixel extension has no tabular analogue; fixed baseline at the column means";
const FIDO_NOTE: &str = "no generative in-painting model; fixed baseline at the column means";
const MISSING_NOTE: &str = "no model trained with missingness; marginal removal over the background";
const CXPLAIN_NOTE: &str = "training-free variant: the learned explainer is replaced by computing normalized leave-one-out loss increases directly";
const MM_NOTE: &str = "the learned masking model is replaced by exhaustive or greedy optimization over a fixed baseline at the column means";

/// Preset names in tabulated order.
pub const PRESET_NAMES: [&str; 27] = [
    "IME (2009)",
    "IME (2010)",
    "QII",
    "SHAP",
    "KernelSHAP",
    "TreeSHAP",
    "LossSHAP",
    "SAGE",
    "Shapley Net Effects",
    "Shapley Effects",
    "Permutation Test",
    "Conditional Perm. Test",
    "Feature Ablation (LOCO)",
    "Univariate Predictors",
    "L2X",
    "INVASE",
    "LIME (Images)",
    "LIME (Tabular)",
    "PredDiff",
    "Occlusion",
    "CXPlain",
    "RISE",
    "MM",
    "MIR",
    "MP",
    "EP",
    "FIDO-CA",
];

/// Accepted spellings beyond the tabulated names.
const ALIASES: [(&str, &str); 6] = [
    ("shapmarginal", "SHAP (marginal)"),
    ("shapconditional", "SHAP"),
    ("loco", "Feature Ablation (LOCO)"),
    ("featureablation", "Feature Ablation (LOCO)"),
    ("conditionalpermutationtest", "Conditional Perm. Test"),
    ("permutationtests", "Permutation Test"),
];

fn build(name: &str) -> Option<MethodSpec> {
    use BehaviorKind as B;
    let b = BehaviorSpec::new;
    let fixed_means = || RemovalStrategy::DefaultValues { values: None };
    let conditional = || RemovalStrategy::ConditionalGaussian { samples: None };
    let marginal = || RemovalStrategy::Marginal { samples: None };
    let separate = || RemovalStrategy::SeparateModels { family: None };
    let shapley = SummarySpec::shapley;
    let remove = || SummarySpec::RemoveIndividual { normalize: false };
    let lime = || SummarySpec::LinearModel { kernel: KernelWeights::Uniform, regularizer: Regularizer::None, samples: None };
    let spec = match name {
        "IME (2009)" => MethodSpec::custom(separate(), b(B::Prediction), shapley()),
        "IME (2010)" => MethodSpec::custom(RemovalStrategy::Uniform { samples: None }, b(B::Prediction), shapley()),
        "QII" => MethodSpec::custom(RemovalStrategy::ProductOfMarginals { samples: None }, b(B::Prediction), shapley()),
        "SHAP" => MethodSpec::custom(conditional(), b(B::Prediction), shapley()),
        "SHAP (marginal)" => MethodSpec::custom(marginal(), b(B::Prediction), shapley()),
        "KernelSHAP" => MethodSpec::custom(
            marginal(),
            b(B::Prediction),
            SummarySpec::Shapley { solver: ShapleySolver::KernelRegression, samples: None },
        ),
        "TreeSHAP" => MethodSpec::custom(RemovalStrategy::TreeDistribution, b(B::Prediction), shapley()),
        "LossSHAP" => MethodSpec::custom(conditional(), b(B::PredictionLoss), shapley()),
        "SAGE" => MethodSpec::custom(conditional(), b(B::DatasetLossLabel), shapley()),
        "Shapley Net Effects" => MethodSpec::custom(separate(), b(B::DatasetLossLabel), shapley()),
        "Shapley Effects" => MethodSpec::custom(conditional(), b(B::DatasetLossOutput), shapley()),
        "Permutation Test" => MethodSpec::custom(marginal(), b(B::DatasetLossLabel), remove()),
        "Conditional Perm. Test" => MethodSpec::custom(conditional(), b(B::DatasetLossLabel), remove()),
        "Feature Ablation (LOCO)" => MethodSpec::custom(separate(), b(B::DatasetLossLabel), remove()),
        "Univariate Predictors" => MethodSpec::custom(separate(), b(B::DatasetLossLabel), SummarySpec::IncludeIndividual),
        "L2X" => MethodSpec::custom(
            marginal(),
            b(B::PredictionMeanLoss),
            SummarySpec::HighValueSubset {
                objective: HighValueObjective::Cardinality { k: None },
                solver: Solver::Exhaustive,
            },
        )
        .substitute(RemovalLabel::MissingnessDuringTraining, MISSING_NOTE),
        "INVASE" => MethodSpec::custom(
            marginal(),
            b(B::PredictionMeanLoss),
            SummarySpec::HighValueSubset {
                objective: HighValueObjective::Regularized { lambda: 0.01 },
                solver: Solver::Exhaustive,
            },
        )
        .substitute(RemovalLabel::MissingnessDuringTraining, MISSING_NOTE),
        "LIME (Images)" => MethodSpec::custom(fixed_means(), b(B::Prediction), lime()),
        "LIME (Tabular)" => MethodSpec::custom(
            RemovalStrategy::Replacement { samples: None, bins: None },
            b(B::Prediction),
            lime(),
        ),
        "PredDiff" => MethodSpec::custom(conditional(), b(B::Prediction).with_link(LinkFunction::LogOdds), remove()),
        "Occlusion" => MethodSpec::custom(RemovalStrategy::Zeros, b(B::Prediction), remove()),
        "CXPlain" => MethodSpec::custom(
            RemovalStrategy::Zeros,
            b(B::PredictionLoss),
            SummarySpec::RemoveIndividual { normalize: true },
        ),
        "RISE" => MethodSpec::custom(
            RemovalStrategy::Zeros,
            b(B::Prediction),
            SummarySpec::MeanWhenIncluded { p: 0.5, samples: None },
        ),
        "MM" => MethodSpec::custom(
            fixed_means(),
            b(B::Prediction),
            SummarySpec::PartitionedSubsets { lambda: 1.0, gamma: 0.01, solver: Solver::Exhaustive },
        ),
        "MIR" => MethodSpec::custom(
            fixed_means(),
            b(B::Prediction),
            SummarySpec::HighValueSubset {
                objective: HighValueObjective::RelativeThreshold { fraction: 0.9 },
                solver: Solver::Greedy,
            },
        )
        .substitute(RemovalLabel::ExtendPixelValues, MIR_NOTE),
        "MP" => MethodSpec::custom(
            fixed_means(),
            b(B::Prediction),
            SummarySpec::LowValueSubset { lambda: 0.01, solver: Solver::Exhaustive },
        )
        .substitute(RemovalLabel::Blurring, MP_NOTE),
        "EP" => MethodSpec::custom(
            fixed_means(),
            b(B::Prediction),
            SummarySpec::HighValueSubset {
                objective: HighValueObjective::Cardinality { k: None },
                solver: Solver::Exhaustive,
            },
        )
        .substitute(RemovalLabel::Blurring, MP_NOTE),
        "FIDO-CA" => MethodSpec::custom(
            fixed_means(),
            b(B::Prediction),
            SummarySpec::HighValueSubset {
                objective: HighValueObjective::Regularized { lambda: 0.01 },
                solver: Solver::Exhaustive,
            },
        )
        .substitute(RemovalLabel::GenerativeModel, FIDO_NOTE),
        _ => return None,
    };
    let mut spec = spec.named(name);
    if name == "CXPlain" {
        spec.substitution_note = Some(CXPLAIN_NOTE.to_string());
        spec.substituted = true;
    }
    if name == "MM" {
        // default values are tabulated for MM; only the amortized optimizer is swapped
        spec.substitution_note = Some(MM_NOTE.to_string());
        spec.substituted = true;
    }
    Some(spec)
}

/// Looks up a preset by name, ignoring case and punctuation.
pub fn preset(name: &str) -> Result<MethodSpec> {
    let key = normalize_name(name);
    let canonical = PRESET_NAMES
        .iter()
        .copied()
        .chain(std::iter::once("SHAP (marginal)"))
        .find(|n| normalize_name(n) == key)
        .or_else(|| ALIASES.iter().find(|(a, _)| *a == key).map(|(_, n)| *n))
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))?;
    Ok(build(canonical).expect("every listed preset builds"))
}

/// All tabulated presets, in tabulated order.
pub fn presets() -> Vec<MethodSpec> {
    PRESET_NAMES.iter().map(|n| build(n).expect("every listed preset builds")).collect()
}

/// A grid cell and the presets occupying it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCell {
    pub position: GridPosition,
    pub presets: Vec<String>,
    /// An implemented removal strategy realizes this cell's removal label.
    pub constructible: bool,
}

/// Every position of the grid, removal-major in label order.
pub fn enumerate_grid() -> Vec<GridCell> {
    let all = presets();
    let mut cells = Vec::with_capacity(RemovalLabel::ALL.len() * BehaviorKind::ALL.len() * SummaryLabel::ALL.len());
    for removal in RemovalLabel::ALL {
        for behavior in BehaviorKind::ALL {
            for summary in SummaryLabel::ALL {
                let position = GridPosition { removal, behavior, summary };
                let presets = all
                    .iter()
                    .filter(|p| p.position == position)
                    .map(|p| p.name.clone().unwrap())
                    .collect();
                cells.push(GridCell { position, presets, constructible: removal.is_implemented() });
            }
        }
    }
    cells
}

/// The single axis along which two methods differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Removal,
    Behavior,
    Summary,
    /// Same choices on every axis; only parameters differ.
    Parameters,
}

/// `None` when the positions differ on more than one axis.
pub fn differing_axis(a: &GridPosition, b: &GridPosition) -> Option<Axis> {
    let diffs = [
        (a.removal.family() != b.removal.family(), Axis::Removal),
        (a.behavior != b.behavior, Axis::Behavior),
        (a.summary != b.summary, Axis::Summary),
    ];
    let mut it = diffs.iter().filter(|(d, _)| *d);
    match (it.next(), it.next()) {
        (None, _) => Some(Axis::Parameters),
        (Some((_, axis)), None) => Some(*axis),
        _ => None,
    }
}

/// Tabulated presets that differ from `spec` along at most one axis.
pub fn neighbors(spec: &MethodSpec) -> Vec<(MethodSpec, Axis)> {
    presets()
        .into_iter()
        .filter(|p| p.name != spec.name || spec.name.is_none())
        .filter(|p| p != spec)
        .filter_map(|p| differing_axis(&spec.position, &p.position).map(|axis| (p, axis)))
        .collect()
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::InvalidParameter(format!("cannot parse {key}={v}")))
}

fn unknown_key(kind: &str, key: &str) -> Error {
    Error::InvalidParameter(format!("unknown {kind} parameter '{key}'"))
}

fn parse_samples(v: &str) -> Result<Option<usize>> {
    if v == "exact" {
        Ok(None)
    } else {
        parse_value("samples", v).map(Some)
    }
}

/// Parses `id` plus `key=value` parameters into a removal strategy.
pub fn parse_removal(id: &str, params: &[(String, String)]) -> Result<RemovalStrategy> {
    let mut s = match normalize_name(id).as_str() {
        "zeros" => RemovalStrategy::Zeros,
        "default" | "defaultvalues" | "baseline" => RemovalStrategy::DefaultValues { values: None },
        "marginal" => RemovalStrategy::Marginal { samples: None },
        "product" | "productofmarginals" => RemovalStrategy::ProductOfMarginals { samples: None },
        "uniform" => RemovalStrategy::Uniform { samples: None },
        "replacement" => RemovalStrategy::Replacement { samples: None, bins: None },
        "conditional" | "conditionalgaussian" => RemovalStrategy::ConditionalGaussian { samples: None },
        "conditionalempirical" => RemovalStrategy::ConditionalEmpirical,
        "tree" | "treedistribution" => RemovalStrategy::TreeDistribution,
        "separate" | "separatemodels" => RemovalStrategy::SeparateModels { family: None },
        _ => return Err(Error::InvalidParameter(format!("unknown removal strategy '{id}'"))),
    };
    for (k, v) in params {
        match (&mut s, k.as_str()) {
            (RemovalStrategy::DefaultValues { values }, "values") => {
                *values = Some(v.split(';').map(|x| parse_value("values", x.trim())).collect::<Result<_>>()?)
            }
            (
                RemovalStrategy::Marginal { samples }
                | RemovalStrategy::ProductOfMarginals { samples }
                | RemovalStrategy::Uniform { samples }
                | RemovalStrategy::Replacement { samples, .. }
                | RemovalStrategy::ConditionalGaussian { samples },
                "samples",
            ) => *samples = parse_samples(v)?,
            (RemovalStrategy::Replacement { bins, .. }, "bins") => *bins = Some(parse_value(k, v)?),
            (RemovalStrategy::SeparateModels { family }, "family") => {
                *family = Some(match v.as_str() {
                    "linear" => ModelFamily::Linear,
                    "logistic" => ModelFamily::Logistic,
                    _ => return Err(Error::InvalidParameter(format!("unknown model family '{v}'"))),
                })
            }
            _ => return Err(unknown_key("removal", k)),
        }
    }
    Ok(s)
}

/// Parses `id` plus `key=value` parameters into a behavior.
pub fn parse_behavior(id: &str, params: &[(String, String)]) -> Result<BehaviorSpec> {
    let kind = match normalize_name(id).as_str() {
        "prediction" => BehaviorKind::Prediction,
        "predictionloss" | "loss" => BehaviorKind::PredictionLoss,
        "predictionmeanloss" | "meanloss" => BehaviorKind::PredictionMeanLoss,
        "datasetloss" | "datasetlosslabel" => BehaviorKind::DatasetLossLabel,
        "datasetlossoutput" => BehaviorKind::DatasetLossOutput,
        _ => return Err(Error::InvalidParameter(format!("unknown behavior '{id}'"))),
    };
    let mut b = BehaviorSpec::new(kind);
    for (k, v) in params {
        match k.as_str() {
            "link" => {
                b.link = match normalize_name(v).as_str() {
                    "identity" => LinkFunction::Identity,
                    "logodds" | "logit" => LinkFunction::LogOdds,
                    _ => return Err(Error::InvalidParameter(format!("unknown link '{v}'"))),
                }
            }
            "loss" => {
                b.loss = Some(match normalize_name(v).as_str() {
                    "mse" | "squarederror" => LossKind::SquaredError,
                    "crossentropy" | "ce" => LossKind::CrossEntropy,
                    _ => return Err(Error::InvalidParameter(format!("unknown loss '{v}'"))),
                })
            }
            "output" | "output_index" => b.output_index = Some(parse_value(k, v)?),
            _ => return Err(unknown_key("behavior", k)),
        }
    }
    Ok(b)
}

fn parse_solver(v: &str) -> Result<Solver> {
    match v {
        "exhaustive" => Ok(Solver::Exhaustive),
        "greedy" => Ok(Solver::Greedy),
        _ => Err(Error::InvalidParameter(format!("unknown solver '{v}'"))),
    }
}

/// Parses `id` plus `key=value` parameters into a summary.
pub fn parse_summary(id: &str, params: &[(String, String)]) -> Result<SummarySpec> {
    let mut s = match normalize_name(id).as_str() {
        "removeindividual" => SummarySpec::RemoveIndividual { normalize: false },
        "includeindividual" => SummarySpec::IncludeIndividual,
        "shapley" | "shapleyvalue" => SummarySpec::shapley(),
        "linearmodel" | "lime" => {
            SummarySpec::LinearModel { kernel: KernelWeights::Uniform, regularizer: Regularizer::None, samples: None }
        }
        "meanwhenincluded" => SummarySpec::MeanWhenIncluded { p: 0.5, samples: None },
        "lowvaluesubset" => SummarySpec::LowValueSubset { lambda: 0.01, solver: Solver::Exhaustive },
        "highvaluesubset" => SummarySpec::HighValueSubset {
            objective: HighValueObjective::Cardinality { k: None },
            solver: Solver::Exhaustive,
        },
        "partitionedsubsets" => SummarySpec::PartitionedSubsets { lambda: 1.0, gamma: 0.01, solver: Solver::Exhaustive },
        _ => return Err(Error::InvalidParameter(format!("unknown summary '{id}'"))),
    };
    for (k, v) in params {
        let key = k.as_str();
        match &mut s {
            SummarySpec::RemoveIndividual { normalize } if key == "normalize" => *normalize = parse_value(key, v)?,
            SummarySpec::Shapley { solver, .. } if key == "solver" => {
                *solver = match normalize_name(v).as_str() {
                    "auto" => ShapleySolver::Auto,
                    "exact" => ShapleySolver::Exact,
                    "permutation" => ShapleySolver::Permutation,
                    "kernel" | "kernelregression" => ShapleySolver::KernelRegression,
                    _ => return Err(Error::InvalidParameter(format!("unknown Shapley solver '{v}'"))),
                }
            }
            SummarySpec::Shapley { samples, .. }
            | SummarySpec::LinearModel { samples, .. }
            | SummarySpec::MeanWhenIncluded { samples, .. }
                if key == "samples" =>
            {
                *samples = parse_samples(v)?
            }
            SummarySpec::LinearModel { kernel, .. } if key == "kernel" => {
                *kernel = match v.as_str() {
                    "uniform" => KernelWeights::Uniform,
                    "shapley" => KernelWeights::Shapley,
                    _ => return Err(Error::InvalidParameter(format!("unknown kernel '{v}'"))),
                }
            }
            SummarySpec::LinearModel { regularizer, .. } if key == "l1" => {
                *regularizer = Regularizer::L1(parse_value(key, v)?)
            }
            SummarySpec::MeanWhenIncluded { p, .. } if key == "p" => *p = parse_value(key, v)?,
            SummarySpec::LowValueSubset { lambda, .. }
            | SummarySpec::PartitionedSubsets { lambda, .. }
                if key == "lambda" =>
            {
                *lambda = parse_value(key, v)?
            }
            SummarySpec::PartitionedSubsets { gamma, .. } if key == "gamma" => *gamma = parse_value(key, v)?,
            SummarySpec::LowValueSubset { solver, .. }
            | SummarySpec::HighValueSubset { solver, .. }
            | SummarySpec::PartitionedSubsets { solver, .. }
                if key == "solver" =>
            {
                *solver = parse_solver(v)?
            }
            SummarySpec::HighValueSubset { objective, .. } => {
                *objective = match key {
                    "k" => HighValueObjective::Cardinality { k: Some(parse_value(key, v)?) },
                    "t" => HighValueObjective::Threshold { t: parse_value(key, v)? },
                    "fraction" => HighValueObjective::RelativeThreshold { fraction: parse_value(key, v)? },
                    "lambda" => HighValueObjective::Regularized { lambda: parse_value(key, v)? },
                    _ => return Err(unknown_key("summary", key)),
                }
            }
            _ => return Err(unknown_key("summary", key)),
        }
    }
    Ok(s)
}
