use std::sync::Arc;

use super::{BehaviorSpec, HighValueObjective, MethodSpec, RemovalStrategy, ShapleySolver, SummarySpec, AUTO_EXACT_DIM};
use crate::behavior::{
    behavior_dataset_loss_label, behavior_dataset_loss_output, behavior_prediction, behavior_prediction_loss,
    behavior_prediction_mean_loss, BehaviorKind, LossFunction, LossKind,
};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::explanation::Explanation;
use crate::game::SetFunction;
use crate::model::SharedModel;
use crate::models::{fit_subset_model_table, DecisionTreeModel, ModelFamily};
use crate::removal::{
    conditional_empirical_removal, conditional_gaussian_removal, fixed_baseline_removal, marginal_removal,
    product_of_marginals_removal, replacement_distribution_removal, separate_models_removal,
    tree_distribution_removal, uniform_removal, BackgroundData, FeatureBounds, GaussianMode, GaussianSpec,
    ReplacementDistributionSet, SamplingMode, PRODUCT_CAP,
};
use crate::subset::{FeatureSubset, MAX_ENUMERATION_DIM};
use crate::subset_fn::SharedSubsetFunction;
use crate::summary::{
    high_value_subset_constrained, high_value_subset_regularized, lime_linear, low_value_subset,
    mean_when_included, minimal_subset_threshold, normalize_attributions, partitioned_subsets, remove_individual,
    include_individual, shapley_exact, shapley_kernel_regression, shapley_permutation_sample, InclusionMode,
    RegressionMode, SamplingPlan, MAX_REGRESSION_DIM,
};

/// Monte Carlo budget used where a sampled estimator is chosen and no budget is given.
pub const DEFAULT_SAMPLES: usize = 1024;
/// Draws per evaluation for removal strategies that cannot enumerate.
pub const DEFAULT_REMOVAL_SAMPLES: usize = 256;

/// Everything a method needs besides its own choices.
pub struct ExplainContext<'a> {
    /// Background rows, labels for loss behaviors, and the source of data-driven defaults.
    pub data: &'a LabeledDataset,
    pub model: SharedModel,
    /// Whether `model` outputs class probabilities.
    pub is_classifier: bool,
    /// Required by the tree-distribution removal.
    pub tree: Option<&'a DecisionTreeModel>,
    /// Row of `data` explained by local behaviors.
    pub instance: Option<usize>,
    pub seed: u64,
    /// Budget for every sampled estimator the method ends up using.
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// The method with every default filled in.
    pub method: MethodSpec,
    pub explanation: Explanation,
    pub u_full: f64,
    pub u_empty: f64,
}

fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl MethodSpec {
    /// Fills every data-dependent default so the result runs without further choices.
    pub fn resolve(&self, ctx: &ExplainContext<'_>) -> Result<MethodSpec> {
        let d = ctx.data.dim();
        let n = ctx.data.len();
        let budget = ctx.samples.unwrap_or(DEFAULT_SAMPLES);
        let removal_budget = ctx.samples.unwrap_or(DEFAULT_REMOVAL_SAMPLES);
        let mut spec = self.clone();

        spec.removal = match spec.removal {
            RemovalStrategy::DefaultValues { values: None } => {
                RemovalStrategy::DefaultValues { values: Some(ctx.data.features().column_means()) }
            }
            RemovalStrategy::ProductOfMarginals { samples: None } => {
                let exact = (n as f64).powi(d as i32) <= PRODUCT_CAP;
                RemovalStrategy::ProductOfMarginals { samples: (!exact).then_some(removal_budget) }
            }
            RemovalStrategy::Uniform { samples: None } => RemovalStrategy::Uniform { samples: Some(removal_budget) },
            RemovalStrategy::Replacement { samples, bins } => RemovalStrategy::Replacement {
                samples: Some(samples.unwrap_or(removal_budget)),
                bins: Some(bins.unwrap_or(crate::data::DEFAULT_QUANTILE_BINS)),
            },
            RemovalStrategy::SeparateModels { family: None } => {
                let binary = ctx.data.labels().iter().all(|&y| y == 0.0 || y == 1.0);
                let family = if ctx.is_classifier && binary { ModelFamily::Logistic } else { ModelFamily::Linear };
                RemovalStrategy::SeparateModels { family: Some(family) }
            }
            other => other,
        };

        let out_dim = match &spec.removal {
            RemovalStrategy::SeparateModels { family: Some(ModelFamily::Logistic) } => 2,
            RemovalStrategy::SeparateModels { .. } => 1,
            _ => ctx.model.out_dim(),
        };
        let b = &mut spec.behavior;
        if b.output_index.is_none() && b.kind == BehaviorKind::Prediction {
            // classifiers explain the class predicted for the instance
            let predicted = match ctx.instance {
                Some(i) if ctx.is_classifier && i < n && out_dim == ctx.model.out_dim() => {
                    let p = ctx.model.predict(ctx.data.row(i));
                    (0..p.len()).fold(0, |best, k| if p[k] > p[best] { k } else { best })
                }
                _ => out_dim - 1,
            };
            b.output_index = Some(predicted);
        }
        if b.loss.is_none() && b.kind != BehaviorKind::Prediction {
            b.loss = Some(if ctx.is_classifier { LossKind::CrossEntropy } else { LossKind::SquaredError });
        }

        let full_ok = |limit: usize| d <= limit;
        spec.summary = match spec.summary {
            SummarySpec::Shapley { solver: ShapleySolver::Auto, samples } => {
                if full_ok(AUTO_EXACT_DIM) {
                    SummarySpec::Shapley { solver: ShapleySolver::Exact, samples: None }
                } else {
                    SummarySpec::Shapley { solver: ShapleySolver::Permutation, samples: Some(samples.unwrap_or(budget)) }
                }
            }
            SummarySpec::Shapley { solver: ShapleySolver::Permutation, samples: None } => {
                SummarySpec::Shapley { solver: ShapleySolver::Permutation, samples: Some(budget) }
            }
            SummarySpec::Shapley { solver: ShapleySolver::KernelRegression, samples: None } if !full_ok(MAX_REGRESSION_DIM) => {
                SummarySpec::Shapley { solver: ShapleySolver::KernelRegression, samples: Some(budget) }
            }
            SummarySpec::LinearModel { kernel, regularizer, samples: None } if !full_ok(MAX_REGRESSION_DIM) => {
                SummarySpec::LinearModel { kernel, regularizer, samples: Some(budget) }
            }
            SummarySpec::MeanWhenIncluded { p, samples: None } if !full_ok(MAX_ENUMERATION_DIM) => {
                SummarySpec::MeanWhenIncluded { p, samples: Some(budget) }
            }
            SummarySpec::HighValueSubset { objective: HighValueObjective::Cardinality { k: None }, solver } => {
                SummarySpec::HighValueSubset {
                    objective: HighValueObjective::Cardinality { k: Some((d / 2).max(1)) },
                    solver,
                }
            }
            other => other,
        };
        Ok(spec)
    }
}

fn background(data: &LabeledDataset) -> Result<BackgroundData> {
    BackgroundData::new(data.features().clone(), data.column_kinds().to_vec())
}

/// Builds the subset function for `strategy`, taking data-driven defaults from `ctx`.
pub fn instantiate_removal(strategy: &RemovalStrategy, ctx: &ExplainContext<'_>) -> Result<SharedSubsetFunction> {
    let model = ctx.model.clone();
    let d = ctx.data.dim();
    let sampling = |s: &Option<usize>| s.map_or(SamplingMode::Exact, SamplingMode::Sampled);
    Ok(match strategy {
        RemovalStrategy::Zeros => Arc::new(fixed_baseline_removal(model, vec![0.0; d])?),
        RemovalStrategy::DefaultValues { values } => {
            let v = values.clone().unwrap_or_else(|| ctx.data.features().column_means());
            Arc::new(fixed_baseline_removal(model, v)?)
        }
        RemovalStrategy::Marginal { samples } => Arc::new(marginal_removal(model, background(ctx.data)?, sampling(samples))?),
        RemovalStrategy::ProductOfMarginals { samples } => {
            Arc::new(product_of_marginals_removal(model, background(ctx.data)?, sampling(samples))?)
        }
        RemovalStrategy::Uniform { samples } => {
            let bounds = FeatureBounds::from_data(ctx.data.features())?;
            Arc::new(uniform_removal(model, bounds, samples.unwrap_or(DEFAULT_REMOVAL_SAMPLES))?)
        }
        RemovalStrategy::Replacement { samples, bins } => {
            let q = ReplacementDistributionSet::from_background(
                &background(ctx.data)?,
                bins.unwrap_or(crate::data::DEFAULT_QUANTILE_BINS),
            )?;
            Arc::new(replacement_distribution_removal(model, q, samples.unwrap_or(DEFAULT_REMOVAL_SAMPLES))?)
        }
        RemovalStrategy::ConditionalGaussian { samples } => {
            let mode = samples.map_or(GaussianMode::MeanPlugin, GaussianMode::Sampled);
            Arc::new(conditional_gaussian_removal(model, GaussianSpec::fit(ctx.data.features())?, mode)?)
        }
        RemovalStrategy::ConditionalEmpirical => Arc::new(conditional_empirical_removal(model, background(ctx.data)?)?),
        RemovalStrategy::TreeDistribution => {
            let tree = ctx.tree.ok_or_else(|| config("tree-distribution removal needs a tree model"))?;
            Arc::new(tree_distribution_removal(tree.clone())?)
        }
        RemovalStrategy::SeparateModels { family } => {
            if !ctx.data.has_labels() {
                return Err(config("separate-models removal needs a labeled dataset"));
            }
            let table = fit_subset_model_table(ctx.data, family.unwrap_or(ModelFamily::Linear))?;
            Arc::new(separate_models_removal(table)?)
        }
    })
}

fn loss_of(b: &BehaviorSpec) -> LossFunction {
    match b.loss {
        Some(LossKind::CrossEntropy) => LossFunction::cross_entropy(),
        _ => LossFunction::squared_error(),
    }
}

fn build_behavior(spec: &MethodSpec, f: SharedSubsetFunction, ctx: &ExplainContext<'_>) -> Result<SetFunction> {
    let b = &spec.behavior;
    let data = ctx.data;
    let local = !b.kind.is_dataset_level();
    let instance = match (local, ctx.instance) {
        (true, None) => return Err(config(format!("behavior '{}' needs an instance", b.kind.label()))),
        (false, Some(_)) => {
            return Err(config(format!("behavior '{}' explains the whole dataset; drop the instance", b.kind.label())))
        }
        (true, Some(i)) if i >= data.len() => {
            return Err(config(format!("instance {i} is out of range for {} rows", data.len())))
        }
        (_, i) => i,
    };
    let needs_label = matches!(b.kind, BehaviorKind::PredictionLoss | BehaviorKind::PredictionMeanLoss | BehaviorKind::DatasetLossLabel);
    if needs_label && !data.has_labels() && data.label_distributions().is_none() {
        return Err(config(format!("behavior '{}' needs labels", b.kind.label())));
    }
    let loss = loss_of(b);
    let seed = ctx.seed;
    match b.kind {
        BehaviorKind::Prediction => {
            let i = instance.unwrap();
            let k = b.output_index.unwrap_or(f.out_dim() - 1);
            if k >= f.out_dim() {
                return Err(config(format!("output index {k} is out of range for {} outputs", f.out_dim())));
            }
            behavior_prediction(f, data.row(i).to_vec(), k, b.link, seed)
        }
        BehaviorKind::PredictionLoss => {
            let i = instance.unwrap();
            behavior_prediction_loss(f, data.row(i).to_vec(), data.labels()[i], loss, seed)
        }
        BehaviorKind::PredictionMeanLoss => {
            let i = instance.unwrap();
            let x = data.row(i).to_vec();
            match data.label_distributions() {
                Some(dists) => behavior_prediction_mean_loss(f, x, &dists[i], loss, seed),
                // a point mass at the observed label reduces the mean loss to the plain loss
                None => behavior_prediction_loss(f, x, data.labels()[i], loss, seed),
            }
        }
        BehaviorKind::DatasetLossLabel => behavior_dataset_loss_label(f, data, loss, seed),
        BehaviorKind::DatasetLossOutput => behavior_dataset_loss_output(f, data, loss, seed),
    }
}

fn summarize(spec: &MethodSpec, u: &SetFunction, seed: u64) -> Result<Explanation> {
    let d = u.dim();
    let plan = |n: usize| SamplingPlan::new(n, seed);
    let regression_mode = |s: &Option<usize>| s.map_or(RegressionMode::FullEnumeration, |n| RegressionMode::Sampled(plan(n)));
    match &spec.summary {
        SummarySpec::RemoveIndividual { normalize: false } => remove_individual(u),
        SummarySpec::RemoveIndividual { normalize: true } => {
            let e = remove_individual(u)?;
            // negative effects carry no weight in a normalized importance distribution
            let clipped: Vec<f64> = e.scores().unwrap().iter().map(|a| a.max(0.0)).collect();
            let normalized = normalize_attributions(&clipped)?;
            Ok(e.map_scores(normalized))
        }
        SummarySpec::IncludeIndividual => include_individual(u),
        SummarySpec::Shapley { solver, samples } => match solver {
            ShapleySolver::Exact => shapley_exact(u),
            ShapleySolver::Auto if d <= AUTO_EXACT_DIM => shapley_exact(u),
            ShapleySolver::Auto | ShapleySolver::Permutation => {
                shapley_permutation_sample(u, plan(samples.unwrap_or(DEFAULT_SAMPLES)))
            }
            ShapleySolver::KernelRegression => shapley_kernel_regression(u, regression_mode(samples)),
        },
        SummarySpec::LinearModel { kernel, regularizer, samples } => {
            lime_linear(u, kernel.clone(), *regularizer, regression_mode(samples))
        }
        SummarySpec::MeanWhenIncluded { p, samples } => {
            let mode = match samples {
                None => InclusionMode::Exact { p: *p },
                Some(n) => InclusionMode::Sampled { plan: plan(*n).with_inclusion_prob(*p) },
            };
            mean_when_included(u, mode)
        }
        SummarySpec::LowValueSubset { lambda, solver } => low_value_subset(u, *lambda, *solver),
        SummarySpec::HighValueSubset { objective, solver } => match *objective {
            HighValueObjective::Cardinality { k } => high_value_subset_constrained(u, k.unwrap_or((d / 2).max(1)), *solver),
            HighValueObjective::Threshold { t } => minimal_subset_threshold(u, t, *solver),
            HighValueObjective::RelativeThreshold { fraction } => {
                let full = u.value(FeatureSubset::full(d))?;
                minimal_subset_threshold(u, full - (1.0 - fraction) * full.abs(), *solver)
            }
            HighValueObjective::Regularized { lambda } => high_value_subset_regularized(u, lambda, *solver),
        },
        SummarySpec::PartitionedSubsets { lambda, gamma, solver } => partitioned_subsets(u, *lambda, *gamma, *solver),
    }
}

/// Resolves `spec` against `ctx`, then removes, evaluates and summarizes.
pub fn run_method(spec: &MethodSpec, ctx: &ExplainContext<'_>) -> Result<RunOutcome> {
    if ctx.data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if ctx.data.dim() != ctx.model.dim() {
        return Err(config(format!(
            "model expects {} features, data has {}",
            ctx.model.dim(),
            ctx.data.dim()
        )));
    }
    let method = spec.resolve(ctx)?;
    let f = instantiate_removal(&method.removal, ctx)?;
    let u = build_behavior(&method, f, ctx)?;
    let explanation = summarize(&method, &u, ctx.seed)?.with_method(method.clone());
    let d = u.dim();
    let u_full = u.value(FeatureSubset::full(d))?;
    let u_empty = u.value(FeatureSubset::empty(d))?;
    Ok(RunOutcome { method, explanation, u_full, u_empty })
}
