use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or parameter combination.
    #[error("configuration error: {0}")]
    Config(String),

    /// A scalar input outside the domain of a formula.
    #[error("{name} = {value} is outside the domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("grid geometry mismatch: {0}")]
    GeometryMismatch(String),

    /// A matrix that violates the density-matrix invariants.
    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    /// Every realization of an ensemble was projected out by post-selection.
    #[error("degenerate ensemble: {0}")]
    DegenerateEnsemble(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, domain: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            domain,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for configuration problems, 3 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Domain { .. }
            | Error::GeometryMismatch(_)
            | Error::Parse { .. } => 2,
            Error::InvalidState(_)
            | Error::DegenerateEnsemble(_)
            | Error::Numerical(_)
            | Error::Io { .. } => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
