use thiserror::Error;

use crate::format::ParseError;
use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("game failed structural validation ({} violation(s)); first: {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    Invalid(Vec<Violation>),

    #[error("profile has {found} entries, the game needs {expected}")]
    IncompleteProfile { expected: usize, found: usize },

    #[error("assignment is not a full, in-range state of the game")]
    BadAssignment,

    #[error("nature has no utility function")]
    NatureHasNoUtility,

    #[error("unknown player index {0}")]
    UnknownPlayer(usize),

    #[error("conditioning event has probability zero under the profile")]
    UnreachableEvent,

    #[error("profile is on the boundary (coordinate {coordinate} = {value}); use the polynomial value decomposition instead")]
    BoundaryProfile { coordinate: usize, value: f64 },

    #[error("epsilon must lie in (0, 1], got {0}")]
    BadEpsilon(f64),

    #[error("profile is not a fixed point: residual {residual:e} exceeds {tolerance:e}")]
    NotFixedPoint { residual: f64, tolerance: f64 },

    #[error("degenerate game: {reason} (after {retries} perturbation retries, reached t = {t_reached})")]
    Degenerate { reason: String, retries: usize, t_reached: f64 },

    #[error("{what} has {size} entries, above the limit of {limit}")]
    TooLarge { what: &'static str, size: u128, limit: u128 },

    #[error("malformed game tree: {0}")]
    InvalidTree(String),

    #[error("unsupported structure: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Parse(#[from] ParseError),
}
