use thiserror::Error;

use crate::statevector::MAX_QUBITS;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {0} outside supported range 1..={MAX_QUBITS}")]
    QubitCount(usize),
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("kernel matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("SMO did not converge within {iterations} iterations (KKT gap {gap:e})")]
    NotConverged { iterations: usize, gap: f64 },
    #[error("VAE training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("synthesized record {0} found in evaluation data")]
    Contamination(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for failures caused by the caller's input (bad files, flags or
    /// arguments) rather than by a numerical or internal fault.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Context { source, .. } => source.is_input_error(),
            Error::NotPsd(_) | Error::NotConverged { .. } | Error::Diverged { .. } => false,
            _ => true,
        }
    }
}
