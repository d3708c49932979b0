use std::fmt;
use std::sync::Arc;

/// A deterministic model `f: R^dim -> R^out_dim`.
pub trait PredictionModel: Send + Sync {
    fn dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn predict(&self, x: &[f64]) -> Vec<f64>;
}

pub type SharedModel = Arc<dyn PredictionModel>;

impl<M: PredictionModel + ?Sized> PredictionModel for Arc<M> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn out_dim(&self) -> usize {
        (**self).out_dim()
    }
    fn predict(&self, x: &[f64]) -> Vec<f64> {
        (**self).predict(x)
    }
}

type PredictFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Wraps a closure as a model.
#[derive(Clone)]
pub struct FnModel {
    dim: usize,
    out_dim: usize,
    f: Arc<PredictFn>,
}

impl FnModel {
    pub fn new(dim: usize, out_dim: usize, f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self { dim, out_dim, f: Arc::new(f) }
    }

    /// Single-output convenience constructor.
    pub fn scalar(dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(dim, 1, move |x| vec![f(x)])
    }

    pub fn shared(self) -> SharedModel {
        Arc::new(self)
    }
}

impl fmt::Debug for FnModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnModel").field("dim", &self.dim).field("out_dim", &self.out_dim).finish()
    }
}

impl PredictionModel for FnModel {
    fn dim(&self) -> usize {
        self.dim
    }
    fn out_dim(&self) -> usize {
        self.out_dim
    }
    fn predict(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }
}
