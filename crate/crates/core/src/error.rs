use thiserror::Error;

/// Errors raised anywhere in the derivation pipeline or the matrix lab.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },

    #[error("size limit exceeded: {what} is {actual}, bound is {bound}")]
    SizeLimit {
        what: &'static str,
        actual: usize,
        bound: usize,
    },

    #[error("degenerate pattern {0}: at least two distinct algebras are required")]
    DegeneratePattern(String),

    #[error("invalid pattern {pattern}: {reason}")]
    InvalidPattern { pattern: String, reason: String },

    #[error("staging error: no rule available for shape {shape}")]
    Staging { shape: String },

    #[error("partitions are not comparable in refinement order")]
    Order,

    #[error("moment table is missing order {0}")]
    MissingOrder(usize),

    #[error("branch overflow: more than {0} solution branches")]
    BranchOverflow(usize),

    #[error("branch is not fully solved: {0} residual constraint(s) remain")]
    NotFullySolved(usize),

    #[error("no value supplied for moment {0}")]
    IncompleteLimits(String),

    #[error("inconclusive instance {instance}: predictions {first} and {second} are too close")]
    InconclusiveInstance {
        instance: String,
        first: String,
        second: String,
    },

    #[error("invalid dimension {0}: matrices need at least 2 rows")]
    InvalidDimension(usize),

    #[error("unknown instance {0}")]
    UnknownInstance(String),

    #[error("assertion failed: {0}")]
    Assertion(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
