use thiserror::Error;

/// Errors raised by the geometry, code and bound routines.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unsupported field order {0}; expected one of 2, 3, 5, 7")]
    UnsupportedField(u32),

    #[error("not a projective point: zero vector")]
    ZeroVector,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("{count} subspaces of projective dimension {dim} exceed the cap of {cap}")]
    TooManySubspaces { dim: usize, count: u128, cap: u128 },

    #[error("projection undefined on center")]
    ProjectionOnCenter,

    #[error("invalid projection: {0}")]
    InvalidProjection(String),

    #[error("not full length: column {0} is zero")]
    NotFullLength(usize),

    #[error("generator matrix has rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("multiset does not span the space: span has projective dimension {span_dim}")]
    NotSpanning { span_dim: isize },

    #[error("complement level {level} is below the maximum point multiplicity {max}")]
    ComplementLevel { level: u32, max: u32 },

    #[error("multisets live in different spaces")]
    SpaceMismatch,

    #[error("infeasible placement: {0}")]
    InfeasiblePlacement(String),

    #[error("invalid construction type {text:?}: {msg}")]
    InvalidType { text: String, msg: String },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("prescription violates a cap: {0}")]
    Prescription(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
