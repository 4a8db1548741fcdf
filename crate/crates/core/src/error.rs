use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("eta = {eta} is not a Casimir value of a ladder with curvature {curvature}")]
    NotInSpectrum { eta: f64, curvature: f64 },

    #[error("ladder for eta = {eta}, K = {curvature} is unbounded and needs a truncation")]
    Unbounded { eta: f64, curvature: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {dim} exceeds dense limit {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("eigenvalue {mu} is not simple (multiplicity or cluster detected)")]
    NotSimple { mu: Complex64 },

    #[error("branch collision at x = {x}")]
    Collision { x: Complex64 },

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("singular tridiagonal solve at shift {shift}")]
    SingularSolve { shift: Complex64 },

    #[error("eigenvalue {eigenvalue} lies within {distance:e} of the contour")]
    EigenvalueOnContour { eigenvalue: Complex64, distance: f64 },

    #[error("truncation not certified up to k_max = {k_max} (last shift {shift:e})")]
    TruncationNotCertified { k_max: i64, shift: f64 },

    #[error("no gamma table for the spectral gap eta_1 = {eta}")]
    MissingGapTable { eta: f64 },

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// Stable snake_case name of the variant, used in error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::NotInSpectrum { .. } => "not_in_spectrum",
            Error::Unbounded { .. } => "unbounded",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::DimensionTooLarge { .. } => "dimension_too_large",
            Error::NotSimple { .. } => "not_simple",
            Error::Collision { .. } => "collision",
            Error::NonConvergence(_) => "non_convergence",
            Error::SingularSolve { .. } => "singular_solve",
            Error::EigenvalueOnContour { .. } => "eigenvalue_on_contour",
            Error::TruncationNotCertified { .. } => "truncation_not_certified",
            Error::MissingGapTable { .. } => "missing_gap_table",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
