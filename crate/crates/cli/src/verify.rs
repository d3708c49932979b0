use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rbexplain::behavior::{behavior_prediction, verify_behavior_identities, LinkFunction, LossFunction};
use rbexplain::data::{ColumnKind, LabeledDataset};
use rbexplain::models::{fit_model, AnyModel, FitFamily};
use rbexplain::registry::{instantiate_removal, RemovalStrategy};
use rbexplain::subset_fn::{check_extension, check_invariance};
use rbexplain::summary::shapley_exact;
use rbexplain::{ExplainContext, FeatureSubset, SetFunction, SharedModel, SharedSubsetFunction, SubsetFunction};

use crate::{obtain_model, CliResult, Failure};

pub const MAX_VERIFY_DIM: usize = 8;
const INVARIANCE_PROBES: usize = 200;
const IDENTITY_TOL: f64 = 1e-10;
const AXIOM_TOL: f64 = 1e-10;

/// Returns `F(x, D) + 1e-3` so the extension check has something to catch.
struct CorruptExtension(SharedSubsetFunction);

impl SubsetFunction for CorruptExtension {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn out_dim(&self) -> usize {
        self.0.out_dim()
    }
    fn evaluate(&self, x: &[f64], s: FeatureSubset, seed: u64) -> rbexplain::Result<Vec<f64>> {
        let mut v = self.0.evaluate(x, s, seed)?;
        if s == FeatureSubset::full(self.dim()) {
            v.iter_mut().for_each(|o| *o += 1e-3);
        }
        Ok(v)
    }
    fn is_invariant(&self) -> bool {
        self.0.is_invariant()
    }
    fn extension_of(&self) -> Option<&SharedModel> {
        self.0.extension_of()
    }
    fn name(&self) -> &'static str {
        "corrupted"
    }
}

struct Tally {
    failed: Vec<String>,
}

impl Tally {
    fn record(&mut self, check: &str, subject: &str, pass: bool, detail: &str) {
        let status = if pass { "pass" } else { "FAIL" };
        println!("{check:<20} {subject:<28} {status:<4} {detail}");
        if !pass {
            self.failed.push(format!("{check}[{subject}]"));
        }
    }
}

fn strategies() -> Vec<(&'static str, RemovalStrategy)> {
    vec![
        ("zeros", RemovalStrategy::Zeros),
        ("default-values", RemovalStrategy::DefaultValues { values: None }),
        ("marginal", RemovalStrategy::Marginal { samples: None }),
        ("product-of-marginals", RemovalStrategy::ProductOfMarginals { samples: Some(32) }),
        ("uniform", RemovalStrategy::Uniform { samples: Some(32) }),
        ("replacement", RemovalStrategy::Replacement { samples: Some(32), bins: None }),
        ("conditional-gaussian", RemovalStrategy::ConditionalGaussian { samples: None }),
        ("conditional-gaussian:sampled", RemovalStrategy::ConditionalGaussian { samples: Some(32) }),
        ("conditional-empirical", RemovalStrategy::ConditionalEmpirical),
        ("tree-distribution", RemovalStrategy::TreeDistribution),
        ("separate-models", RemovalStrategy::SeparateModels { family: None }),
    ]
}

/// Subsets a strategy accepts: conditional matching only works on categorical features.
fn allowed(strategy: &RemovalStrategy, kinds: &[ColumnKind], s: FeatureSubset) -> bool {
    match strategy {
        RemovalStrategy::ConditionalEmpirical => {
            s == FeatureSubset::full(kinds.len()) || s.indices().all(|i| kinds[i] == ColumnKind::Categorical)
        }
        _ => true,
    }
}

fn random_subset(rng: &mut ChaCha8Rng, d: usize) -> FeatureSubset {
    let bits = (0..d).filter(|_| rng.random::<bool>()).fold(0u64, |b, i| b | 1 << i);
    FeatureSubset::from_bits(bits, d).expect("bits fit the dimension")
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn check_strategy(
    tally: &mut Tally,
    name: &str,
    strategy: &RemovalStrategy,
    f: SharedSubsetFunction,
    data: &LabeledDataset,
    seed: u64,
) -> CliResult<()> {
    let d = data.dim();
    let probes: Vec<Vec<f64>> = (0..data.len()).map(|i| data.row(i).to_vec()).collect();

    match f.extension_of() {
        Some(m) => {
            let pass = check_extension(f.as_ref(), m.as_ref(), &probes)?;
            let full = FeatureSubset::full(d);
            let mut gap: f64 = 0.0;
            for x in &probes {
                gap = gap.max(max_gap(&f.evaluate(x, full, 0)?, &m.predict(x)));
            }
            tally.record("check_extension", name, pass, &format!("max discrepancy {gap:.3e}"));
        }
        None => tally.record("check_extension", name, false, "no model to extend"),
    }

    let kinds = data.column_kinds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..INVARIANCE_PROBES {
        let s = random_subset(&mut rng, d);
        if !allowed(strategy, kinds, s) {
            continue;
        }
        let x = &probes[rng.random_range(0..probes.len())];
        let donor = &probes[rng.random_range(0..probes.len())];
        let alt: Vec<f64> = (0..d).map(|i| if s.contains(i) { x[i] } else { donor[i] }).collect();
        let probe_seed = rng.random::<u64>();
        checked += 1;
        if !check_invariance(f.as_ref(), x, &alt, s, probe_seed)? {
            violations += 1;
            worst = worst.max(max_gap(&f.evaluate(x, s, probe_seed)?, &f.evaluate(&alt, s, probe_seed)?));
        }
    }
    let detail = format!("{violations}/{checked} probes differ, max discrepancy {worst:.3e}");
    if f.is_invariant() {
        tally.record("check_invariance", name, violations == 0, &detail);
    } else {
        println!("{:<20} {name:<28} non-invariant (expected) {detail}", "check_invariance");
    }

    let identities_apply = (0..d).all(|i| allowed(strategy, kinds, FeatureSubset::empty(d).with(i)));
    if data.has_labels() && identities_apply {
        let loss = if f.out_dim() > 1 { LossFunction::cross_entropy() } else { LossFunction::squared_error() };
        let report = verify_behavior_identities(f.clone(), data, loss, seed)?;
        let gap = report.max_discrepancy();
        tally.record(
            "behavior_identities",
            name,
            report.holds(IDENTITY_TOL),
            &format!("max discrepancy {gap:.3e} over {} subsets", report.subsets_checked),
        );
    } else {
        println!("{:<20} {name:<28} skipped (needs labels and categorical-only conditioning)", "behavior_identities");
    }

    if identities_apply {
        let game = behavior_prediction(f.clone(), probes[0].clone(), f.out_dim() - 1, LinkFunction::Identity, seed)?;
        shapley_axioms(tally, name, &game)?;
    }
    Ok(())
}

fn phi(table: Vec<f64>, d: usize) -> CliResult<Vec<f64>> {
    let u = SetFunction::from_table(d, table)?;
    Ok(shapley_exact(&u)?.scores().expect("attribution").to_vec())
}

/// Efficiency on the game itself; symmetry, null player and linearity on games derived from it.
fn shapley_axioms(tally: &mut Tally, name: &str, game: &SetFunction) -> CliResult<()> {
    let d = game.dim();
    let t = game.table()?;
    let p = phi(t.clone(), d)?;
    let full = t[t.len() - 1];
    let efficiency = (p.iter().sum::<f64>() - (full - t[0])).abs();

    let mut worst = efficiency;
    if d >= 2 {
        // swapping features 0 and 1 then symmetrizing makes them interchangeable
        let swap = |b: usize| {
            let (x0, x1) = (b & 1, b >> 1 & 1);
            (b & !3) | x0 << 1 | x1
        };
        let sym: Vec<f64> = (0..t.len()).map(|b| t[b] + t[swap(b)]).collect();
        let ps = phi(sym, d)?;
        worst = worst.max((ps[0] - ps[1]).abs());
    }
    // feature 0 ignored entirely
    let null: Vec<f64> = (0..t.len()).map(|b| t[b & !1]).collect();
    worst = worst.max(phi(null, d)?[0].abs());
    // φ(u + 2w) = φ(u) + 2φ(w) with w(S) = |S|²
    let w: Vec<f64> = (0..t.len()).map(|b| (b.count_ones() as f64).powi(2)).collect();
    let combo: Vec<f64> = t.iter().zip(&w).map(|(a, b)| a + 2.0 * b).collect();
    let (pc, pw) = (phi(combo, d)?, phi(w, d)?);
    for i in 0..d {
        worst = worst.max((pc[i] - p[i] - 2.0 * pw[i]).abs());
    }
    tally.record("shapley_axioms", name, worst < AXIOM_TOL, &format!("max residual {worst:.3e}"));
    Ok(())
}

/// Runs every check and prints one line per (check, strategy). Returns whether all passed.
pub fn run(data: &LabeledDataset, model_source: &str, seed: u64, fault: Option<&str>) -> CliResult<bool> {
    let d = data.dim();
    if d > MAX_VERIFY_DIM {
        return Err(Failure::config(format!("--data: verification needs at most {MAX_VERIFY_DIM} features, got {d}")));
    }
    if let Some(f) = fault {
        if f != "corrupt-extension" {
            return Err(Failure::config(format!("--inject-fault: unknown fault '{f}'")));
        }
    }
    let model = obtain_model(model_source, data)?;
    let tree = match &model {
        AnyModel::Tree(t) => t.clone(),
        _ => match fit_model(data, FitFamily::Tree)? {
            AnyModel::Tree(t) => t,
            _ => unreachable!("tree family fits a tree"),
        },
    };
    let shared: SharedModel = Arc::new(model.clone());
    let mut tally = Tally { failed: Vec::new() };
    for (name, strategy) in strategies() {
        let tree_model: SharedModel = Arc::new(tree.clone());
        let ctx = ExplainContext {
            data,
            model: if strategy == RemovalStrategy::TreeDistribution { tree_model } else { shared.clone() },
            is_classifier: model.is_classifier(),
            tree: Some(&tree),
            instance: None,
            seed,
            samples: None,
        };
        let f = match instantiate_removal(&strategy, &ctx) {
            Ok(f) => f,
            Err(e) => {
                tally.record("construct", name, false, &e.to_string());
                continue;
            }
        };
        check_strategy(&mut tally, name, &strategy, f.clone(), data, seed)?;
        if fault.is_some() && name == "marginal" {
            let corrupted: SharedSubsetFunction = Arc::new(CorruptExtension(f));
            check_strategy(&mut tally, "marginal:corrupted", &strategy, corrupted, data, seed)?;
        }
    }
    if tally.failed.is_empty() {
        println!("all checks passed");
        Ok(true)
    } else {
        println!("failed: {}", tally.failed.join(", "));
        Ok(false)
    }
}
