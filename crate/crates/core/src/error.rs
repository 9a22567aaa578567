use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not symmetric positive definite{}", cell_suffix(*.cell))]
    NotSpd { cell: Option<usize> },
    #[error("matrix is singular")]
    Singular,
    #[error("body is lower-dimensional")]
    DegenerateBody,
    #[error("norm vanishes on a nonzero probe vector")]
    DegenerateNorm,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("solver failed: {0}")]
    SolverFailure(String),
    #[error("cube (level {level}, index {index}) lies outside the domain")]
    CubeOutsideDomain { level: u32, index: usize },
    #[error("set functions live on different domains")]
    DomainMismatch,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("operator bound violated after {escalations} escalations (ratio {ratio}, bound {bound})")]
    BoundViolation { escalations: u32, ratio: f64, bound: f64 },
    #[error("operator failed the {0} probe")]
    NonMonotoneOperator(String),
    #[error("weight is not in A_p: {0}")]
    NotInAp(String),
    #[error("exponent out of range: {0}")]
    ExponentOutOfRange(String),
    #[error("exponents do not match the requested case: {0}")]
    CaseMismatch(String),
    #[error("input has zero norm")]
    ZeroNorm,
    #[error("variant {variant} is not defined for p = {p}")]
    VariantMismatch { variant: String, p: f64 },
    #[error("io error: {0}")]
    Io(String),
}

fn cell_suffix(cell: Option<usize>) -> String {
    match cell {
        Some(c) => format!(" (cell {c})"),
        None => String::new(),
    }
}

impl Error {
    /// Attach a cell index to a `NotSpd` error.
    pub fn at_cell(self, cell: usize) -> Self {
        match self {
            Error::NotSpd { .. } => Error::NotSpd { cell: Some(cell) },
            other => other,
        }
    }

    /// True for errors caused by bad input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::SolverFailure(_) | Error::BoundViolation { .. } | Error::NonMonotoneOperator(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
