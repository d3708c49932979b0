use serde::Serialize;

use crate::registry::MethodSpec;
use crate::subset::FeatureSubset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExplanationKind {
    Attribution,
    Selection,
}

#[derive(Debug, Clone, PartialEq)]
enum Payload {
    Attribution { scores: Vec<f64>, stderr: Option<Vec<f64>> },
    Selection(FeatureSubset),
}

/// Output of a summary: per-feature scores or a selected subset.
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    payload: Payload,
    intercept: Option<f64>,
    evaluations_used: usize,
    method: Option<MethodSpec>,
}

impl Explanation {
    pub fn attribution(scores: Vec<f64>, evaluations_used: usize) -> Self {
        Self {
            payload: Payload::Attribution { scores, stderr: None },
            intercept: None,
            evaluations_used,
            method: None,
        }
    }

    /// Attribution with standard errors; negative or NaN errors are a bug in the caller.
    pub fn attribution_with_stderr(scores: Vec<f64>, stderr: Vec<f64>, evaluations_used: usize) -> Self {
        assert_eq!(scores.len(), stderr.len());
        assert!(stderr.iter().all(|&e| e >= 0.0), "stderr entries must be nonnegative");
        Self {
            payload: Payload::Attribution { scores, stderr: Some(stderr) },
            intercept: None,
            evaluations_used,
            method: None,
        }
    }

    pub fn selection(selected: FeatureSubset, evaluations_used: usize) -> Self {
        Self { payload: Payload::Selection(selected), intercept: None, evaluations_used, method: None }
    }

    pub fn with_intercept(mut self, b0: f64) -> Self {
        self.intercept = Some(b0);
        self
    }

    pub fn with_method(mut self, method: MethodSpec) -> Self {
        self.method = Some(method);
        self
    }

    pub fn kind(&self) -> ExplanationKind {
        match self.payload {
            Payload::Attribution { .. } => ExplanationKind::Attribution,
            Payload::Selection(_) => ExplanationKind::Selection,
        }
    }

    pub fn scores(&self) -> Option<&[f64]> {
        match &self.payload {
            Payload::Attribution { scores, .. } => Some(scores),
            Payload::Selection(_) => None,
        }
    }

    pub fn stderr(&self) -> Option<&[f64]> {
        match &self.payload {
            Payload::Attribution { stderr, .. } => stderr.as_deref(),
            Payload::Selection(_) => None,
        }
    }

    pub fn selected(&self) -> Option<FeatureSubset> {
        match self.payload {
            Payload::Selection(s) => Some(s),
            Payload::Attribution { .. } => None,
        }
    }

    pub fn intercept(&self) -> Option<f64> {
        self.intercept
    }

    pub fn evaluations_used(&self) -> usize {
        self.evaluations_used
    }

    pub fn method(&self) -> Option<&MethodSpec> {
        self.method.as_ref()
    }

    /// Replaces the scores, keeping everything else.
    pub(crate) fn map_scores(mut self, scores: Vec<f64>) -> Self {
        if let Payload::Attribution { scores: s, stderr } = &mut self.payload {
            *s = scores;
            *stderr = None;
        }
        self
    }
}
