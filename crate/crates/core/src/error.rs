use alloc::boxed::Box;
use alloc::string::String;

/// Errors raised by signal construction, relation evaluation and the solvers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A point lies outside the domain of a relation. `index` names the
    /// offending sample when the violation is pointwise.
    #[error("domain violation ({constraint}){}", fmt_index(.index))]
    Domain {
        constraint: String,
        index: Option<usize>,
    },

    #[error("singular linear system (pivot ratio {pivot_ratio:e})")]
    Singular { pivot_ratio: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("diverged at iteration {iteration}: residual {residual:e}")]
    Diverged { iteration: usize, residual: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("cannot build relation for {path}: {reason}")]
    Construction { path: String, reason: String },

    #[error("iteration {iteration}: {source}")]
    AtIteration { iteration: usize, source: Box<Error> },

    #[error("{context}: {source}")]
    Context { context: String, source: Box<Error> },
}

fn fmt_index(index: &Option<usize>) -> String {
    match index {
        Some(k) => alloc::format!(" at sample {k}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn domain(constraint: impl Into<String>) -> Self {
        Error::Domain {
            constraint: constraint.into(),
            index: None,
        }
    }

    pub(crate) fn domain_at(constraint: impl Into<String>, index: usize) -> Self {
        Error::Domain {
            constraint: constraint.into(),
            index: Some(index),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Strips `Context` and `AtIteration` wrappers.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::AtIteration { source, .. } | Error::Context { source, .. } => source.root_cause(),
            other => other,
        }
    }

    /// True when the root cause is a domain violation.
    pub fn is_domain(&self) -> bool {
        matches!(self.root_cause(), Error::Domain { .. })
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
