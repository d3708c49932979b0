use rand::seq::SliceRandom;

use super::SamplingPlan;
use crate::error::{Error, Result};
use crate::explanation::Explanation;
use crate::game::SetFunction;
use crate::rng::summary_rng;
use crate::subset::{binomial, FeatureSubset, MAX_ENUMERATION_DIM};

/// Exact Shapley values from the full table of `u`.
pub fn shapley_exact(u: &SetFunction) -> Result<Explanation> {
    let d = u.dim();
    if d > MAX_ENUMERATION_DIM {
        return Err(Error::DimensionTooLarge { dim: d, max: MAX_ENUMERATION_DIM });
    }
    let table = u.table()?;
    // |S|!(d-|S|-1)!/d!
    let weights: Vec<f64> = (0..d).map(|k| 1.0 / (d as f64 * binomial(d - 1, k))).collect();
    let mut phi = vec![0.0; d];
    for (bits, &v) in table.iter().enumerate() {
        let k = (bits as u64).count_ones() as usize;
        for (i, p) in phi.iter_mut().enumerate() {
            if bits >> i & 1 == 0 {
                *p += weights[k] * (table[bits | 1 << i] - v);
            }
        }
    }
    Ok(Explanation::attribution(phi, u.eval_count()))
}

/// Permutations are drawn in blocks so each block's prefixes can be evaluated together.
const BLOCK: usize = 128;

/// Averages marginal contributions over `n` random orderings, with standard errors.
pub fn shapley_permutation_sample(u: &SetFunction, plan: SamplingPlan) -> Result<Explanation> {
    if plan.n_samples < 2 {
        return Err(Error::InvalidParameter("permutation sampling needs at least 2 samples".into()));
    }
    let d = u.dim();
    let mut count = 0.0;
    let mut mean = vec![0.0; d];
    let mut m2 = vec![0.0; d];
    let mut start = 0;
    while start < plan.n_samples {
        let end = (start + BLOCK).min(plan.n_samples);
        let perms: Vec<Vec<usize>> = (start..end)
            .map(|k| {
                let mut p: Vec<usize> = (0..d).collect();
                p.shuffle(&mut summary_rng(plan.seed, k as u64));
                p
            })
            .collect();
        let mut queries = Vec::with_capacity(perms.len() * (d + 1));
        for p in &perms {
            let mut s = FeatureSubset::empty(d);
            queries.push(s);
            for &i in p {
                s = s.with(i);
                queries.push(s);
            }
        }
        let values = u.values(&queries)?;
        for (p, v) in perms.iter().zip(values.chunks(d + 1)) {
            count += 1.0;
            for (j, &i) in p.iter().enumerate() {
                let x = v[j + 1] - v[j];
                let delta = x - mean[i];
                mean[i] += delta / count;
                m2[i] += delta * (x - mean[i]);
            }
        }
        start = end;
    }
    let stderr = m2.iter().map(|&s| (s.max(0.0) / (count - 1.0)).sqrt() / count.sqrt()).collect();
    Ok(Explanation::attribution_with_stderr(mean, stderr, u.eval_count()))
}
