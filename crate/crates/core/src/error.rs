//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Transmission delay is undefined for a non-positive channel gain.
    #[error("undefined delay: channel gain must be positive, got {0}")]
    UndefinedDelay(f64),

    /// Curve fit has fewer distinct abscissae than free parameters.
    #[error("underdetermined fit: need >= 4 samples with >= 4 distinct ratios, got {distinct} distinct of {total}")]
    UnderdeterminedFit { distinct: usize, total: usize },

    /// An operation that needs at least one sample got none.
    #[error("empty sample set")]
    EmptySamples,

    /// Budgets cannot support the requested number of users.
    #[error("infeasible budgets: {0}")]
    Infeasible(String),

    /// Linearization anchors do not admit a strictly feasible start.
    #[error("anchor infeasible for the linearized constraint set: {0}")]
    AnchorInfeasible(String),

    /// Brute-force oracle guard against combinatorial blow-up.
    #[error("brute-force oracle limited to 3 users, got {0}")]
    OracleScale(usize),

    /// Per-user input slices disagree in length.
    #[error("mismatched lengths: {0}")]
    LengthMismatch(String),

    /// Text input could not be parsed.
    #[error("parse error in {path} (line {line}): {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// A scenario field violates its invariant.
    #[error("invalid scenario field `{field}`: {msg}")]
    InvalidScenario { field: String, msg: String },

    /// Configuration file problem (I/O aside).
    #[error("config error: {0}")]
    Config(String),

    /// Nothing to emit.
    #[error("empty result: nothing to emit")]
    EmptyResult,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
