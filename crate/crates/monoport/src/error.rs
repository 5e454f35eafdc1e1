use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: not valid JSON: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },

    /// One entry per failed schema keyword, `"<instance path>: <message>"`.
    #[error("schema violation:\n  {}", .0.join("\n  "))]
    Schema(Vec<String>),

    #[error("invalid run file: {0}")]
    RunSpec(String),

    #[error(transparent)]
    Core(#[from] monoport_core::Error),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("{0} property violation(s)")]
    Violations(usize),
}

impl Error {
    /// 1 property violations, 2 input or construction errors, 3 no
    /// convergence, 4 domain violations.
    pub fn exit_code(&self) -> u8 {
        use monoport_core::Error as E;
        match self {
            Error::Violations(_) => 1,
            Error::NotConverged { .. } => 3,
            Error::Core(e) => match e.root_cause() {
                E::Domain { .. } => 4,
                E::NotConverged { .. } | E::Diverged { .. } => 3,
                _ => 2,
            },
            Error::Io { .. } | Error::Json { .. } | Error::Schema(_) | Error::RunSpec(_) => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
