use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("{what} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: i64,
        min: i64,
        max: i64,
    },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid lattice path: {0}")]
    InvalidPath(String),

    #[error("state space has {size} states, above the cap of {cap}")]
    CapExceeded { size: u128, cap: u128 },

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("censoring scheme horizon {scheme} is shorter than the stream horizon {stream}")]
    SchemeTooShort { scheme: f64, stream: f64 },

    #[error("not increasing: {0}")]
    NotIncreasing(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("paths out of order at x = {x}")]
    OrderViolation { x: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("profile does not drop below eps = {eps} before t = {t_max}")]
    NonBracketing { eps: f64, t_max: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(what: &'static str, value: i64, min: i64, max: i64) -> Result<()> {
    if value < min || value > max {
        return Err(Error::OutOfRange {
            what,
            value,
            min,
            max,
        });
    }
    Ok(())
}
