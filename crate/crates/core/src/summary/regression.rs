use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SamplingPlan;
use crate::error::{Error, Result};
use crate::explanation::Explanation;
use crate::game::SetFunction;
use crate::rng::summary_rng;
use crate::subset::{binomial, FeatureSubset};

/// Full enumeration of the regression dataset is limited to `d ≤ 20`.
pub const MAX_REGRESSION_DIM: usize = 20;

/// Stand-in weight for `∅` and `D` under the Shapley kernel in unconstrained fits.
const SHAPLEY_ENDPOINT_WEIGHT: f64 = 1e6;

const CD_MAX_SWEEPS: usize = 100_000;
const CD_TOLERANCE: f64 = 1e-12;

/// Weighting kernel `π(|S|, d)` over subsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "table")]
pub enum KernelWeights {
    Uniform,
    Shapley,
    /// Weight per subset size `0..=d`.
    Custom(Vec<f64>),
}

impl KernelWeights {
    /// `π(k, d)`; the Shapley kernel is infinite at `k ∈ {0, d}` and is reported as `None` there.
    pub fn weight(&self, k: usize, d: usize) -> Option<f64> {
        match self {
            Self::Uniform => Some(1.0),
            Self::Shapley => {
                (k > 0 && k < d).then(|| (d - 1) as f64 / (binomial(d, k) * k as f64 * (d - k) as f64))
            }
            Self::Custom(t) => t.get(k).copied(),
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        if let Self::Custom(t) = self {
            if t.len() != d + 1 {
                return Err(Error::DimensionMismatch { expected: d + 1, got: t.len() });
            }
            if t.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
                return Err(Error::InvalidParameter("kernel weights must be finite and nonnegative".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "lambda")]
pub enum Regularizer {
    None,
    L1(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode", content = "plan")]
pub enum RegressionMode {
    FullEnumeration,
    Sampled(SamplingPlan),
}

fn check_full(d: usize) -> Result<()> {
    if d > MAX_REGRESSION_DIM {
        return Err(Error::DimensionTooLarge { dim: d, max: MAX_REGRESSION_DIM });
    }
    Ok(())
}

fn solve_spd(a: DMatrix<f64>, b: DVector<f64>, what: &str) -> Result<DVector<f64>> {
    match a.cholesky() {
        Some(c) => Ok(c.solve(&b)),
        None => Err(Error::SingularSystem(format!("{what}: normal equations are not positive definite"))),
    }
}

/// Subsets drawn for the sampled kernel regression, with multiplicities.
fn sample_shapley_subsets(d: usize, plan: &SamplingPlan) -> BTreeMap<u64, f64> {
    // P(|S| = k) ∝ π(k) C(d, k) = (d-1) / (k (d-k))
    let sizes: Vec<f64> = (1..d).map(|k| 1.0 / (k as f64 * (d - k) as f64)).collect();
    let total: f64 = sizes.iter().sum();
    let mut counts = BTreeMap::new();
    for n in 0..plan.n_samples {
        let mut rng = summary_rng(plan.seed, n as u64);
        let mut r = rng.random::<f64>() * total;
        let mut k = d - 1;
        for (j, &w) in sizes.iter().enumerate() {
            if r < w {
                k = j + 1;
                break;
            }
            r -= w;
        }
        let bits = sample(&mut rng, d, k).iter().fold(0u64, |b, i| b | 1 << i);
        *counts.entry(bits).or_insert(0.0) += 1.0;
    }
    counts
}

/// Shapley values as the solution of a kernel-weighted least squares problem
/// with `b₀ = u({})` and `b₀ + Σ bᵢ = u(D)` imposed exactly.
pub fn shapley_kernel_regression(u: &SetFunction, mode: RegressionMode) -> Result<Explanation> {
    let d = u.dim();
    let empty = u.value(FeatureSubset::empty(d))?;
    let full = u.value(FeatureSubset::full(d))?;
    let total = full - empty;
    if d == 1 {
        return Ok(Explanation::attribution(vec![total], u.eval_count()).with_intercept(empty));
    }

    let rows: Vec<(u64, f64)> = match mode {
        RegressionMode::FullEnumeration => {
            check_full(d)?;
            let kernel = KernelWeights::Shapley;
            (1..(1u64 << d) - 1).map(|b| (b, kernel.weight(b.count_ones() as usize, d).unwrap())).collect()
        }
        RegressionMode::Sampled(plan) => {
            plan.validate()?;
            let counts = sample_shapley_subsets(d, &plan);
            if counts.len() < d {
                return Err(Error::SingularSystem(format!(
                    "{} distinct sampled subsets for {d} features",
                    counts.len()
                )));
            }
            counts.into_iter().collect()
        }
    };
    let subsets: Vec<FeatureSubset> = rows.iter().map(|&(b, _)| FeatureSubset::from_bits_unchecked(b, d)).collect();
    let values = u.values(&subsets)?;

    // eliminate the last coefficient through the efficiency constraint
    let m = d - 1;
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut c = DVector::<f64>::zeros(m);
    let mut x = vec![0.0; m];
    for ((bits, w), v) in rows.iter().zip(&values) {
        let last = (bits >> m & 1) as f64;
        for (j, xj) in x.iter_mut().enumerate() {
            *xj = (bits >> j & 1) as f64 - last;
        }
        let y = v - empty - last * total;
        for j in 0..m {
            if x[j] == 0.0 {
                continue;
            }
            c[j] += w * x[j] * y;
            for k in 0..m {
                a[(j, k)] += w * x[j] * x[k];
            }
        }
    }
    let b = solve_spd(a, c, "kernel regression")?;
    let mut phi: Vec<f64> = b.iter().copied().collect();
    phi.push(total - phi.iter().sum::<f64>());
    Ok(Explanation::attribution(phi, u.eval_count()).with_intercept(empty))
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Cyclic coordinate descent on `bᵀGb − 2cᵀb + λ Σ_{i≥1} |bᵢ|`; coordinate 0 is the unpenalized intercept.
fn lasso_cd(g: &DMatrix<f64>, c: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let p = c.len();
    let mut b = DVector::<f64>::zeros(p);
    for _ in 0..CD_MAX_SWEEPS {
        let mut max_change = 0.0_f64;
        for j in 0..p {
            if g[(j, j)] <= 0.0 {
                continue;
            }
            let mut rho = c[j];
            for k in 0..p {
                if k != j {
                    rho -= g[(j, k)] * b[k];
                }
            }
            let next = if j == 0 { rho / g[(j, j)] } else { soft_threshold(rho, lambda / 2.0) / g[(j, j)] };
            max_change = max_change.max((next - b[j]).abs());
            b[j] = next;
        }
        if max_change < CD_TOLERANCE {
            break;
        }
    }
    b
}

/// Weighted linear surrogate `b₀ + Σ_{i∈S} bᵢ ≈ u(S)` with an optional L1 penalty.
pub fn lime_linear(u: &SetFunction, weights: KernelWeights, reg: Regularizer, mode: RegressionMode) -> Result<Explanation> {
    let d = u.dim();
    weights.validate(d)?;
    if let Regularizer::L1(l) = reg {
        if !(l >= 0.0) {
            return Err(Error::InvalidParameter(format!("L1 strength {l} must be nonnegative")));
        }
    }
    let pi = |k: usize| weights.weight(k, d).unwrap_or(SHAPLEY_ENDPOINT_WEIGHT);

    let rows: Vec<(u64, f64)> = match mode {
        RegressionMode::FullEnumeration => {
            check_full(d)?;
            (0..1u64 << d).map(|b| (b, pi(b.count_ones() as usize))).collect()
        }
        RegressionMode::Sampled(plan) => {
            plan.validate()?;
            let mut counts: BTreeMap<u64, f64> = BTreeMap::new();
            for n in 0..plan.n_samples {
                let mut rng = summary_rng(plan.seed, n as u64);
                let bits = (0..d).filter(|_| rng.random::<f64>() < plan.inclusion_prob).fold(0u64, |b, i| b | 1 << i);
                *counts.entry(bits).or_insert(0.0) += 1.0;
            }
            counts.into_iter().map(|(b, n)| (b, n * pi(b.count_ones() as usize))).collect()
        }
    };
    let subsets: Vec<FeatureSubset> = rows.iter().map(|&(b, _)| FeatureSubset::from_bits_unchecked(b, d)).collect();
    let values = u.values(&subsets)?;

    let p = d + 1;
    let mut g = DMatrix::<f64>::zeros(p, p);
    let mut c = DVector::<f64>::zeros(p);
    let mut active = Vec::with_capacity(p);
    for ((bits, w), v) in rows.iter().zip(&values) {
        if *w == 0.0 {
            continue;
        }
        active.clear();
        active.push(0);
        active.extend((0..d).filter(|&i| bits >> i & 1 == 1).map(|i| i + 1));
        for &j in &active {
            c[j] += w * v;
            for &k in &active {
                g[(j, k)] += w;
            }
        }
    }
    let b = match reg {
        Regularizer::None => solve_spd(g, c, "linear surrogate")?,
        Regularizer::L1(lambda) => lasso_cd(&g, &c, lambda),
    };
    let scores = b.iter().skip(1).copied().collect();
    Ok(Explanation::attribution(scores, u.eval_count()).with_intercept(b[0]))
}
