use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SamplingPlan;
use crate::error::{Error, Result};
use crate::explanation::Explanation;
use crate::game::SetFunction;
use crate::rng::summary_rng;
use crate::subset::{FeatureSubset, MAX_ENUMERATION_DIM};

const BLOCK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum InclusionMode {
    /// Enumerate every subset; each feature is present independently with probability `p`.
    Exact { p: f64 },
    Sampled { plan: SamplingPlan },
}

/// `a_i = E[u(S) | i ∈ S]` when features are kept independently with probability `p`.
pub fn mean_when_included(u: &SetFunction, mode: InclusionMode) -> Result<Explanation> {
    let d = u.dim();
    match mode {
        InclusionMode::Exact { p } => {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidParameter(format!("inclusion probability {p} is outside (0, 1)")));
            }
            if d > MAX_ENUMERATION_DIM {
                return Err(Error::DimensionTooLarge { dim: d, max: MAX_ENUMERATION_DIM });
            }
            let table = u.table()?;
            // p^(|S|-1) (1-p)^(d-|S|) for |S| = 1..=d
            let w: Vec<f64> = (0..=d)
                .map(|k| if k == 0 { 0.0 } else { p.powi(k as i32 - 1) * (1.0 - p).powi((d - k) as i32) })
                .collect();
            let mut a = vec![0.0; d];
            for (bits, &v) in table.iter().enumerate() {
                let k = (bits as u64).count_ones() as usize;
                for (i, ai) in a.iter_mut().enumerate() {
                    if bits >> i & 1 == 1 {
                        *ai += w[k] * v;
                    }
                }
            }
            Ok(Explanation::attribution(a, u.eval_count()))
        }
        InclusionMode::Sampled { plan } => {
            plan.validate()?;
            let mut count = vec![0.0; d];
            let mut mean = vec![0.0; d];
            let mut m2 = vec![0.0; d];
            let mut start = 0;
            while start < plan.n_samples {
                let end = (start + BLOCK).min(plan.n_samples);
                let masks: Vec<FeatureSubset> = (start..end)
                    .map(|n| {
                        let mut rng = summary_rng(plan.seed, n as u64);
                        let bits = (0..d).filter(|_| rng.random::<f64>() < plan.inclusion_prob).fold(0u64, |b, i| b | 1 << i);
                        FeatureSubset::from_bits_unchecked(bits, d)
                    })
                    .collect();
                let values = u.values(&masks)?;
                for (s, &v) in masks.iter().zip(&values) {
                    for i in s.indices() {
                        count[i] += 1.0;
                        let delta = v - mean[i];
                        mean[i] += delta / count[i];
                        m2[i] += delta * (v - mean[i]);
                    }
                }
                start = end;
            }
            if let Some(feature) = count.iter().position(|&c| c == 0.0) {
                return Err(Error::InsufficientSamples { feature });
            }
            let stderr = m2
                .iter()
                .zip(&count)
                .map(|(&s, &c)| if c < 2.0 { 0.0 } else { (s.max(0.0) / (c - 1.0)).sqrt() / c.sqrt() })
                .collect();
            Ok(Explanation::attribution_with_stderr(mean, stderr, u.eval_count()))
        }
    }
}
