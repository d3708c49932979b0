use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {dim} exceeds the limit of {max} for this operation")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A method or run description that cannot be executed as given.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("background data is empty")]
    EmptyBackground,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("exact product of marginals needs {terms} terms, cap is {cap}")]
    ProductTooLarge { terms: f64, cap: f64 },

    #[error("bounds for feature {feature} have lo > hi")]
    DegenerateBounds { feature: usize },

    #[error("categorical column {feature} has a single distinct value")]
    DegenerateColumn { feature: usize },

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("no background rows match the conditioning values")]
    NoMatchingRows,

    #[error("feature {feature} is not categorical and cannot be matched on")]
    NonCategoricalConditioning { feature: usize },

    #[error("tree node {node} has no coverage count")]
    MissingCoverage { node: usize },

    #[error("no model for subset {subset:#b}")]
    MissingSubsetModel { subset: u64 },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("linear system is singular: {0}")]
    SingularSystem(String),

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("labels are not binary (0/1)")]
    NonBinaryLabels,

    #[error("infeasible: u(D) = {full} is below the threshold {threshold}")]
    Infeasible { full: f64, threshold: f64 },

    #[error("invalid subset size k = {k} for d = {dim}")]
    InvalidK { k: usize, dim: usize },

    #[error("{candidates} candidate subsets exceed the exhaustive cap of {cap}")]
    TooManyCandidates { candidates: f64, cap: f64 },

    #[error("attributions sum to zero")]
    ZeroSum,

    #[error("attribution {index} is negative")]
    NegativeEntry { index: usize },

    #[error("no sampled subset contains feature {feature}")]
    InsufficientSamples { feature: usize },

    #[error("unknown preset {0:?}")]
    UnknownPreset(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
