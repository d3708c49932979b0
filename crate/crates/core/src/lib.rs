//! Removal-based model explanations.
//!
//! A method is three independent choices: how features are removed
//! ([`removal`]), which model behavior is analyzed ([`behavior`]), and how the
//! resulting set function is summarized ([`summary`]). [`registry`] names the
//! published combinations and lays out the full grid.

pub mod behavior;
pub mod data;
pub mod error;
pub mod explanation;
pub mod game;
pub mod matrix;
pub mod model;
pub mod models;
pub mod registry;
pub mod removal;
pub mod rng;
pub mod subset;
pub mod subset_fn;
pub mod summary;

pub use error::{Error, Result};
pub use explanation::{Explanation, ExplanationKind};
pub use game::SetFunction;
pub use matrix::Matrix;
pub use model::{FnModel, PredictionModel, SharedModel};
pub use registry::{preset, run_method, ExplainContext, MethodSpec};
pub use subset::FeatureSubset;
pub use subset_fn::{SharedSubsetFunction, SubsetFunction};
