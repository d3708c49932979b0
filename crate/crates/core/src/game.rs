//! Cached set functions `u: P(D) -> R`.

use std::collections::HashMap;
use std::fmt;
use std::sync::RwLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::subset::{enumerate_subsets, FeatureSubset, MAX_DIM};

type EvalFn = dyn Fn(FeatureSubset) -> Result<f64> + Send + Sync;

/// Below this many queries a batch is evaluated on the calling thread.
const PARALLEL_BATCH: usize = 32;

/// A set function with a memo of every subset it has evaluated.
///
/// Concurrent readers are allowed. When two threads miss on the same subset
/// both compute it, the first insertion wins and is counted once; evaluation
/// functions are deterministic so both see the same value.
pub struct SetFunction {
    dim: usize,
    eval: Box<EvalFn>,
    cache: RwLock<HashMap<u64, f64>>,
}

impl SetFunction {
    pub fn new(dim: usize, eval: impl Fn(FeatureSubset) -> Result<f64> + Send + Sync + 'static) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dim {dim} out of range");
        Self { dim, eval: Box::new(eval), cache: RwLock::new(HashMap::new()) }
    }

    /// Game given by an explicit table indexed by subset bitmask.
    pub fn from_table(dim: usize, values: Vec<f64>) -> Result<Self> {
        let expected = enumerate_subsets(dim)?.len();
        if values.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: values.len() });
        }
        Ok(Self::new(dim, move |s| Ok(values[s.bits() as usize])))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, s: FeatureSubset) -> Result<f64> {
        if s.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: s.dim() });
        }
        if let Some(&v) = self.cache.read().expect("cache poisoned").get(&s.bits()) {
            return Ok(v);
        }
        let v = (self.eval)(s)?;
        let mut cache = self.cache.write().expect("cache poisoned");
        Ok(*cache.entry(s.bits()).or_insert(v))
    }

    /// Evaluates a batch, in parallel for large batches. Output order matches input order.
    pub fn values(&self, subsets: &[FeatureSubset]) -> Result<Vec<f64>> {
        if subsets.len() < PARALLEL_BATCH {
            subsets.iter().map(|&s| self.value(s)).collect()
        } else {
            subsets.par_iter().map(|&s| self.value(s)).collect()
        }
    }

    /// Full table `u(S)` indexed by bitmask.
    pub fn table(&self) -> Result<Vec<f64>> {
        let all: Vec<_> = enumerate_subsets(self.dim)?.collect();
        self.values(&all)
    }

    /// Number of distinct subsets evaluated so far.
    pub fn eval_count(&self) -> usize {
        self.cache.read().expect("cache poisoned").len()
    }

    /// Cached `(bits, value)` pairs in ascending bitmask order.
    pub fn cached(&self) -> Vec<(u64, f64)> {
        let mut v: Vec<_> = self.cache.read().expect("cache poisoned").iter().map(|(&k, &v)| (k, v)).collect();
        v.sort_unstable_by_key(|p| p.0);
        v
    }
}

impl fmt::Debug for SetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SetFunction").field("dim", &self.dim).field("eval_count", &self.eval_count()).finish()
    }
}
