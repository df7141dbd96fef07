use thiserror::Error;

/// Errors raised by the BSDE laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BsdeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch in {context}: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        context: &'static str,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("coefficient process `{name}` is negative ({value}) at path {path}, node {node}")]
    NegativeCoefficient {
        name: String,
        path: usize,
        node: usize,
        value: f64,
    },

    #[error("alpha positivity violated: alpha = {value} at path {path}, node {node}")]
    AlphaNotPositive { path: usize, node: usize, value: f64 },

    #[error(
        "weight overflow: log p = {log_weight} exceeds {threshold} at path {path}, node {node}; \
         reduce the horizon or the coefficient processes"
    )]
    WeightOverflow {
        path: usize,
        node: usize,
        log_weight: f64,
        threshold: f64,
    },

    #[error("regression singular at node {node}: design is rank deficient even with ridge {ridge}")]
    RegressionSingular { node: usize, ridge: f64 },

    #[error("regression needs at least {needed} paths, got {got}")]
    InsufficientPaths { needed: usize, got: usize },

    #[error("non-finite value in {what} at node {node}")]
    NonFinite { what: &'static str, node: usize },

    #[error("oracle unavailable: {0}")]
    OracleUnavailable(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<BsdeError>,
    },
}

impl BsdeError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        BsdeError::InvalidArgument(msg.into())
    }

    /// Wraps the error with a short description of the surrounding operation.
    pub fn context(self, context: impl Into<String>) -> Self {
        BsdeError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping context layers.
    pub fn root(&self) -> &BsdeError {
        match self {
            BsdeError::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, BsdeError>;
