use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A coordinate sits on one of the basis states, where the x chart is infinite.
    #[error("coordinate {value} is on a basis state; the x coordinate would be infinite")]
    InfiniteCoordinate { value: f64 },

    /// A measurement step is a projective one and at least one step size is infinite.
    #[error("singular measurement parameters (alpha={alpha}, delta={delta}): atanh argument is +-1")]
    SingularParameters { alpha: f64, delta: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The master-equation grid lost more mass through its edges than allowed.
    #[error("boundary mass {mass:e} exceeds tolerance {tolerance:e}; widen the grid")]
    BoundaryOverflow { mass: f64, tolerance: f64 },

    #[error("requested dt={dt:e} violates the stability limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("relative mass drift {drift:e} exceeds {tolerance:e}")]
    MassDrift { drift: f64, tolerance: f64 },

    /// Negative density beyond the clipping tolerance.
    #[error("density became negative ({value:e}) at cell {cell}")]
    NegativeDensity { value: f64, cell: usize },

    #[error("coordinate map is not monotone on its domain")]
    NonMonotoneMap,

    /// The form factor vanishes or changes sign where a positive value is required.
    #[error("form factor is not strictly positive (min {min})")]
    NonPositiveProfile { min: f64 },

    #[error("coordinate {value} is outside the branch domain ({reason})")]
    OutsideBranch { value: f64, reason: &'static str },

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
