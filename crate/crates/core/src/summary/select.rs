use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explanation::Explanation;
use crate::game::SetFunction;
use crate::subset::{binomial, subsets_of_size, FeatureSubset, MAX_ENUMERATION_DIM};

/// Exhaustive search over a fixed subset size is limited to this many candidates.
pub const MAX_CANDIDATES: f64 = 2e6;

/// `Greedy` means forward selection, except for the threshold problem where it
/// means backward removal from `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Exhaustive,
    Greedy,
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) {
        return Err(Error::InvalidParameter(format!("{name} = {v} must be nonnegative")));
    }
    Ok(())
}

fn full_table(u: &SetFunction) -> Result<Vec<f64>> {
    let d = u.dim();
    if d > MAX_ENUMERATION_DIM {
        return Err(Error::DimensionTooLarge { dim: d, max: MAX_ENUMERATION_DIM });
    }
    u.table()
}

/// Candidates by size, then ascending bitmask.
fn ordered_subsets(d: usize) -> impl Iterator<Item = FeatureSubset> {
    (0..=d).flat_map(move |k| subsets_of_size(d, k))
}

/// First strict maximizer of `score` in candidate order.
fn best_of(d: usize, score: impl Fn(FeatureSubset) -> f64) -> FeatureSubset {
    let mut best = FeatureSubset::empty(d);
    let mut best_v = f64::NEG_INFINITY;
    for s in ordered_subsets(d) {
        let v = score(s);
        if v > best_v {
            best = s;
            best_v = v;
        }
    }
    best
}

/// Forward selection. `score` maps candidate subsets to objective values. With
/// `steps = Some(k)` exactly `k` features are added; otherwise selection stops
/// when no addition strictly improves the objective.
fn greedy_forward(
    d: usize,
    steps: Option<usize>,
    score: impl Fn(&[FeatureSubset]) -> Result<Vec<f64>>,
) -> Result<FeatureSubset> {
    let mut s = FeatureSubset::empty(d);
    let mut current = score(&[s])?[0];
    for _ in 0..steps.unwrap_or(d) {
        let candidates: Vec<FeatureSubset> = s.complement().indices().map(|i| s.with(i)).collect();
        if candidates.is_empty() {
            break;
        }
        let values = score(&candidates)?;
        let (mut bi, mut bv) = (0, f64::NEG_INFINITY);
        for (k, &v) in values.iter().enumerate() {
            if v > bv {
                bi = k;
                bv = v;
            }
        }
        if steps.is_none() && bv <= current {
            break;
        }
        s = candidates[bi];
        current = bv;
    }
    Ok(s)
}

/// `argmin_S u(D \ S) + λ|S|`.
pub fn low_value_subset(u: &SetFunction, lambda: f64, solver: Solver) -> Result<Explanation> {
    check_nonneg("lambda", lambda)?;
    let d = u.dim();
    let s = match solver {
        Solver::Exhaustive => {
            let t = full_table(u)?;
            best_of(d, |s| -(t[s.complement().bits() as usize] + lambda * s.len() as f64))
        }
        Solver::Greedy => greedy_forward(d, None, |cands| {
            let rest: Vec<FeatureSubset> = cands.iter().map(|s| s.complement()).collect();
            let v = u.values(&rest)?;
            Ok(v.iter().zip(cands).map(|(v, s)| -(v + lambda * s.len() as f64)).collect())
        })?,
    };
    Ok(Explanation::selection(s, u.eval_count()))
}

/// Smallest `S` with `u(S) ≥ t`.
pub fn minimal_subset_threshold(u: &SetFunction, t: f64, solver: Solver) -> Result<Explanation> {
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("threshold {t} must be finite")));
    }
    let d = u.dim();
    let full = FeatureSubset::full(d);
    let s = match solver {
        Solver::Exhaustive => {
            let table = full_table(u)?;
            if table[full.bits() as usize] < t {
                return Err(Error::Infeasible { full: table[full.bits() as usize], threshold: t });
            }
            ordered_subsets(d).find(|s| table[s.bits() as usize] >= t).expect("D is feasible")
        }
        Solver::Greedy => {
            let top = u.value(full)?;
            if top < t {
                return Err(Error::Infeasible { full: top, threshold: t });
            }
            let mut s = full;
            while !s.is_empty() {
                let candidates: Vec<FeatureSubset> = s.indices().map(|i| s.without(i)).collect();
                let values = u.values(&candidates)?;
                let (mut bi, mut bv) = (0, f64::NEG_INFINITY);
                for (k, &v) in values.iter().enumerate() {
                    if v > bv {
                        bi = k;
                        bv = v;
                    }
                }
                if bv < t {
                    break;
                }
                s = candidates[bi];
            }
            s
        }
    };
    Ok(Explanation::selection(s, u.eval_count()))
}

/// `argmax_{|S| = k} u(S)`.
pub fn high_value_subset_constrained(u: &SetFunction, k: usize, solver: Solver) -> Result<Explanation> {
    let d = u.dim();
    if k > d {
        return Err(Error::InvalidK { k, dim: d });
    }
    let s = match solver {
        Solver::Exhaustive => {
            let n = binomial(d, k);
            if n > MAX_CANDIDATES {
                return Err(Error::TooManyCandidates { candidates: n, cap: MAX_CANDIDATES });
            }
            let cands: Vec<FeatureSubset> = subsets_of_size(d, k).collect();
            let values = u.values(&cands)?;
            let mut best = 0;
            for (i, &v) in values.iter().enumerate() {
                if v > values[best] {
                    best = i;
                }
            }
            cands[best]
        }
        Solver::Greedy => greedy_forward(d, Some(k), |c| u.values(c))?,
    };
    Ok(Explanation::selection(s, u.eval_count()))
}

/// `argmax_S u(S) − λ|S|`.
pub fn high_value_subset_regularized(u: &SetFunction, lambda: f64, solver: Solver) -> Result<Explanation> {
    check_nonneg("lambda", lambda)?;
    let d = u.dim();
    let s = match solver {
        Solver::Exhaustive => {
            let t = full_table(u)?;
            best_of(d, |s| t[s.bits() as usize] - lambda * s.len() as f64)
        }
        Solver::Greedy => greedy_forward(d, None, |c| {
            let v = u.values(c)?;
            Ok(v.iter().zip(c).map(|(v, s)| v - lambda * s.len() as f64).collect())
        })?,
    };
    Ok(Explanation::selection(s, u.eval_count()))
}

/// `argmax_S u(S) − λ u(D \ S) − γ|S|`.
pub fn partitioned_subsets(u: &SetFunction, lambda: f64, gamma: f64, solver: Solver) -> Result<Explanation> {
    check_nonneg("lambda", lambda)?;
    check_nonneg("gamma", gamma)?;
    let d = u.dim();
    let s = match solver {
        Solver::Exhaustive => {
            let t = full_table(u)?;
            best_of(d, |s| {
                t[s.bits() as usize] - lambda * t[s.complement().bits() as usize] - gamma * s.len() as f64
            })
        }
        Solver::Greedy => greedy_forward(d, None, |c| {
            let v = u.values(c)?;
            let rest: Vec<FeatureSubset> = c.iter().map(|s| s.complement()).collect();
            let w = u.values(&rest)?;
            Ok(c.iter().enumerate().map(|(i, s)| v[i] - lambda * w[i] - gamma * s.len() as f64).collect())
        })?,
    };
    Ok(Explanation::selection(s, u.eval_count()))
}
