use std::collections::HashSet;
use std::sync::Arc;

use proptest::prelude::*;

use rbexplain::behavior::{behavior_dataset_loss_output, LossFunction};
use rbexplain::data::{load_csv, write_csv, ColumnKind, ColumnSpec, DatasetSchema, LabeledDataset};
use rbexplain::models::{fit_linear, LinearFitOptions, LinearModel};
use rbexplain::removal::{
    conditional_gaussian_removal, fixed_baseline_removal, marginal_removal, product_of_marginals_removal,
    BackgroundData, GaussianMode, GaussianSpec, SamplingMode,
};
use rbexplain::subset::enumerate_subsets;
use rbexplain::subset_fn::{check_extension, check_invariance};
use rbexplain::summary::{
    high_value_subset_constrained, high_value_subset_regularized, include_individual, lime_linear,
    low_value_subset, minimal_subset_threshold, partitioned_subsets, remove_individual,
    shapley_permutation_sample, KernelWeights, RegressionMode, Regularizer, SamplingPlan, Solver,
};
use rbexplain::{FeatureSubset, FnModel, Matrix, SetFunction, SharedModel, SubsetFunction};

fn nonlinear(d: usize) -> SharedModel {
    FnModel::new(d, 2, move |x| {
        let s: f64 = x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * v).sum();
        vec![s.tanh(), x.iter().map(|v| v * v).sum::<f64>()]
    })
    .shared()
}

fn rows(d: usize, n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-3.0..3.0f64, d), n)
}

fn game(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 1 << d)
}

fn with_dim<T: std::fmt::Debug>(
    dims: std::ops::RangeInclusive<usize>,
    inner: impl Fn(usize) -> BoxedStrategy<T>,
) -> impl Strategy<Value = (usize, T)> {
    dims.prop_flat_map(move |d| (Just(d), inner(d)))
}

fn selected(e: rbexplain::Explanation) -> u64 {
    e.selected().unwrap().bits()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn enumeration_is_complete_and_distinct(d in 1usize..=12) {
        let all: Vec<u64> = enumerate_subsets(d).unwrap().map(|s| s.bits()).collect();
        prop_assert_eq!(all.len(), 1 << d);
        prop_assert_eq!(all.iter().collect::<HashSet<_>>().len(), 1 << d);
    }

    #[test]
    fn cache_counts_distinct_queries((d, t) in with_dim(1..=6, |d| game(d).boxed()), queries in prop::collection::vec(any::<u64>(), 1..40)) {
        let u = SetFunction::from_table(d, t).unwrap();
        let mut seen = HashSet::new();
        for q in queries {
            let s = FeatureSubset::from_bits(q & ((1 << d) - 1), d).unwrap();
            u.value(s).unwrap();
            seen.insert(s.bits());
            prop_assert_eq!(u.eval_count(), seen.len());
        }
    }

    #[test]
    fn deterministic_strategies_are_invariant_extensions(
        (d, data) in with_dim(2..=6, |d| (rows(d, 8), prop::collection::vec(-3.0..3.0f64, d), prop::collection::vec(-3.0..3.0f64, d)).boxed()),
        bits in any::<u64>(),
        seed in any::<u64>(),
    ) {
        let (bg, x, noise) = data;
        let model = nonlinear(d);
        let s = FeatureSubset::from_bits(bits & ((1 << d) - 1), d).unwrap();
        let alt: Vec<f64> = (0..d).map(|i| if s.contains(i) { x[i] } else { noise[i] }).collect();
        let background = BackgroundData::continuous(Matrix::from_rows(&bg).unwrap()).unwrap();
        let fs: Vec<Box<dyn SubsetFunction>> = vec![
            Box::new(fixed_baseline_removal(model.clone(), bg[0].clone()).unwrap()),
            Box::new(marginal_removal(model.clone(), background.clone(), SamplingMode::Exact).unwrap()),
            Box::new(marginal_removal(model.clone(), background.clone(), SamplingMode::Sampled(5)).unwrap()),
            Box::new(product_of_marginals_removal(model.clone(), background, SamplingMode::Sampled(5)).unwrap()),
        ];
        for f in &fs {
            prop_assert!(check_invariance(f.as_ref(), &x, &alt, s, seed).unwrap());
            prop_assert!(check_extension(f.as_ref(), model.as_ref(), &[x.clone(), alt.clone()]).unwrap());
        }
    }

    #[test]
    fn single_row_marginal_is_a_baseline((d, data) in with_dim(1..=6, |d| (rows(d, 1), prop::collection::vec(-3.0..3.0f64, d)).boxed()), bits in any::<u64>()) {
        let (bg, x) = data;
        let model = nonlinear(d);
        let s = FeatureSubset::from_bits(bits & ((1 << d) - 1), d).unwrap();
        let m = marginal_removal(model.clone(), BackgroundData::continuous(Matrix::from_rows(&bg).unwrap()).unwrap(), SamplingMode::Exact).unwrap();
        let b = fixed_baseline_removal(model, bg[0].clone()).unwrap();
        prop_assert_eq!(m.evaluate(&x, s, 0).unwrap(), b.evaluate(&x, s, 0).unwrap());
    }

    #[test]
    fn product_matches_marginal_with_one_removed((d, data) in with_dim(1..=5, |d| (rows(d, 6), prop::collection::vec(-3.0..3.0f64, d)).boxed()), removed in any::<usize>(), drop_none in any::<bool>()) {
        let (bg, x) = data;
        let model = nonlinear(d);
        let full = FeatureSubset::full(d);
        let s = if drop_none { full } else { full.without(removed % d) };
        let background = BackgroundData::continuous(Matrix::from_rows(&bg).unwrap()).unwrap();
        let m = marginal_removal(model.clone(), background.clone(), SamplingMode::Exact).unwrap();
        let p = product_of_marginals_removal(model, background, SamplingMode::Exact).unwrap();
        let (a, b) = (m.evaluate(&x, s, 0).unwrap(), p.evaluate(&x, s, 0).unwrap());
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()));
        }
    }

    #[test]
    fn diagonal_gaussian_on_linear_is_marginal(
        (d, data) in with_dim(1..=5, |d| (rows(d, 5), prop::collection::vec(-2.0..2.0f64, d), prop::collection::vec(0.1..3.0f64, d), prop::collection::vec(-3.0..3.0f64, d)).boxed()),
        bits in any::<u64>(),
    ) {
        let (half, beta, var, x) = data;
        // rows r and 2μ − r give column means exactly μ = 0
        let bg: Vec<Vec<f64>> = half.iter().cloned().chain(half.iter().map(|r| r.iter().map(|v| -v).collect())).collect();
        let model: SharedModel = Arc::new(LinearModel { coefficients: beta, intercept: 0.5 });
        let cov: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| if i == j { var[i] } else { 0.0 }).collect()).collect();
        let s = FeatureSubset::from_bits(bits & ((1 << d) - 1), d).unwrap();
        let g = conditional_gaussian_removal(model.clone(), GaussianSpec::new(vec![0.0; d], cov).unwrap(), GaussianMode::MeanPlugin).unwrap();
        let m = marginal_removal(model, BackgroundData::continuous(Matrix::from_rows(&bg).unwrap()).unwrap(), SamplingMode::Exact).unwrap();
        let (a, b) = (g.evaluate(&x, s, 0).unwrap()[0], m.evaluate(&x, s, 0).unwrap()[0]);
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
    }

    #[test]
    fn output_loss_game_is_nonpositive((d, data) in with_dim(1..=4, |d| rows(d, 6).boxed()), seed in any::<u64>()) {
        let model = nonlinear(d);
        let m = Matrix::from_rows(&data).unwrap();
        let ds = LabeledDataset::unlabeled(m.clone()).unwrap();
        let f = Arc::new(marginal_removal(model, BackgroundData::continuous(m).unwrap(), SamplingMode::Sampled(4)).unwrap());
        let u = behavior_dataset_loss_output(f, &ds, LossFunction::squared_error(), seed).unwrap();
        let t = u.table().unwrap();
        prop_assert_eq!(t[(1 << d) - 1], 0.0);
        prop_assert!(t.iter().all(|v| *v <= 0.0));
    }

    #[test]
    fn cross_entropy_is_finite(p in prop::sample::select(vec![0.0, 1.0, 1e-300, 0.5]), y in 0usize..2) {
        let ce = LossFunction::cross_entropy();
        let target = ce.target(y as f64, 2).unwrap();
        prop_assert!(ce.loss(&[1.0 - p, p], &target).is_finite());
    }

    #[test]
    fn seeded_sampling_repeats_exactly((d, t) in with_dim(2..=7, |d| game(d).boxed()), seed in any::<u64>()) {
        let a = shapley_permutation_sample(&SetFunction::from_table(d, t.clone()).unwrap(), SamplingPlan::new(64, seed)).unwrap();
        let b = shapley_permutation_sample(&SetFunction::from_table(d, t).unwrap(), SamplingPlan::new(64, seed)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn individual_summaries_use_at_most_d_plus_one((d, t) in with_dim(1..=8, |d| game(d).boxed())) {
        let u = SetFunction::from_table(d, t.clone()).unwrap();
        remove_individual(&u).unwrap();
        prop_assert!(u.eval_count() <= d + 1);
        let u = SetFunction::from_table(d, t).unwrap();
        include_individual(&u).unwrap();
        prop_assert!(u.eval_count() <= d + 1);
    }

    #[test]
    fn selections_ignore_positive_scaling(
        (d, t) in with_dim(1..=7, |d| game(d).boxed()),
        c in 0.1..10.0f64, lambda in 0.0..0.5f64, gamma in 0.0..0.2f64, frac in 0.0..1.0f64, k in 0usize..8,
        greedy in any::<bool>(),
    ) {
        let solver = if greedy { Solver::Greedy } else { Solver::Exhaustive };
        let k = k.min(d);
        let scaled: Vec<f64> = t.iter().map(|v| c * v).collect();
        let thr = t[(1 << d) - 1] - frac;
        let run = |table: &[f64], s: f64| -> Vec<u64> {
            let u = || SetFunction::from_table(d, table.to_vec()).unwrap();
            vec![
                selected(low_value_subset(&u(), s * lambda, solver).unwrap()),
                selected(minimal_subset_threshold(&u(), s * thr, solver).unwrap()),
                selected(high_value_subset_constrained(&u(), k, solver).unwrap()),
                selected(high_value_subset_regularized(&u(), s * lambda, solver).unwrap()),
                selected(partitioned_subsets(&u(), lambda, s * gamma, solver).unwrap()),
            ]
        };
        prop_assert_eq!(run(&t, 1.0), run(&scaled, c));
    }

    #[test]
    fn uniform_lime_in_two_dimensions_averages_marginals(t in game(2)) {
        let u = SetFunction::from_table(2, t.clone()).unwrap();
        let e = lime_linear(&u, KernelWeights::Uniform, Regularizer::None, RegressionMode::FullEnumeration).unwrap();
        let a = e.scores().unwrap();
        let want = [((t[1] - t[0]) + (t[3] - t[2])) / 2.0, ((t[2] - t[0]) + (t[3] - t[1])) / 2.0];
        prop_assert!((a[0] - want[0]).abs() < 1e-10 && (a[1] - want[1]).abs() < 1e-10, "{a:?} vs {want:?}");
    }

    #[test]
    fn linear_fit_recovers_noiseless_coefficients(
        (_, data) in with_dim(1..=5, |d| (rows(d, 30), prop::collection::vec(-3.0..3.0f64, d)).boxed()),
        intercept in -2.0..2.0f64,
    ) {
        let (xs, beta) = data;
        let truth = LinearModel { coefficients: beta, intercept };
        let y: Vec<f64> = xs.iter().map(|r| truth.decision(r)).collect();
        let fit = fit_linear(&Matrix::from_rows(&xs).unwrap(), &y, LinearFitOptions::default()).unwrap();
        for (a, b) in fit.coefficients.iter().zip(&truth.coefficients) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        prop_assert!((fit.intercept - intercept).abs() < 1e-10);
    }

    #[test]
    fn csv_round_trip_is_exact((d, data) in with_dim(1..=4, |d| (rows(d, 10), prop::collection::vec(-1e6..1e6f64, 10)).boxed())) {
        let (xs, y) = data;
        let mut columns: Vec<ColumnSpec> = (0..d).map(|i| ColumnSpec { name: format!("x{i}"), kind: ColumnKind::Continuous }).collect();
        columns.push(ColumnSpec { name: "y".into(), kind: ColumnKind::Continuous });
        let schema = DatasetSchema::new(columns, Some("y".into())).unwrap();
        let ds = LabeledDataset::new(Matrix::from_rows(&xs).unwrap(), y).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_csv(&path, &ds, &schema).unwrap();
        let back = load_csv(&path, &schema).unwrap();
        prop_assert_eq!(back.features(), ds.features());
        prop_assert_eq!(back.labels(), ds.labels());
    }
}
