use thiserror::Error;

/// Crate-wide error type. Numerical routines refuse out-of-domain inputs
/// instead of clamping them, so callers can distinguish "the math says no"
/// from "the bound is vacuous".
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// The requested quantity is undefined for these inputs (for example a
    /// runtime bound when the per-iteration acceptance probability is zero).
    #[error("{op} is undefined: {msg}")]
    Undefined { op: &'static str, msg: String },

    /// A sizing request cannot be met by any sample count.
    #[error("infeasible request in {op}: {msg}")]
    Infeasible { op: &'static str, msg: String },

    /// The problem instance does not support the requested operation.
    #[error("capability error: {msg}")]
    Capability { msg: String },

    /// An embedded solver failed; `context` says where in the pipeline.
    #[error("solver failure ({status}) in {context}")]
    Solver { status: String, context: String },

    /// An iterative routine hit its iteration cap before converging.
    #[error("{op} failed to converge within {limit} iterations")]
    Convergence { op: &'static str, limit: u64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { op, msg: msg.into() }
    }

    pub fn undefined(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Undefined { op, msg: msg.into() }
    }

    pub fn infeasible(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Infeasible { op, msg: msg.into() }
    }
}
