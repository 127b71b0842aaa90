use thiserror::Error;

/// Errors raised by the numerical layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("product {0} leaves the window [-{1}, {1}]")]
    WindowOverflow(i64, i64),

    #[error("level {level} exceeds the resolution limit {limit}")]
    ResolutionExceeded { level: u32, limit: u32 },

    #[error("element {0} is not in the group")]
    InvalidElement(usize),

    #[error("operands belong to different groups")]
    GroupMismatch,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid group table: {0}")]
    InvalidTable(String),

    #[error("not a unitary representation: {0}")]
    NotUnitary(String),

    #[error("unsupported construction: {0}")]
    Unsupported(String),

    #[error("iterative limit did not converge: {0}")]
    NonConvergent(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("sort {0} is missing from the structure")]
    MissingSort(String),

    #[error("reconstruction mismatch: {0}")]
    ReconstructionMismatch(String),

    #[error("Kazhdan constant undefined: every vector is invariant")]
    Undefined,

    #[error("cover impossible at resolution: {0}")]
    UncoverableAtResolution(String),

    #[error("estimate not applicable: {0}")]
    NotApplicable(String),

    #[error("csv export failed: {0}")]
    Csv(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
