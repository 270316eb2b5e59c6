use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("matrix is numerically singular (condition estimate {cond:.3e})")]
    Singular { cond: f64 },
    #[error("spectral point: {0}")]
    SpectralPoint(String),
    #[error("spectra overlap (smallest separation {min_sep:.3e}); no unique solution")]
    Overlap { min_sep: f64 },
    #[error("factorization infeasible: {0}")]
    Infeasible(String),
    #[error("split does not define a root: graph basis condition {cond:.3e}")]
    SplitInvalid { cond: f64 },
    #[error("iteration diverged after {iters} steps (last step {last_step:.3e})")]
    Divergence { iters: usize, last_step: f64 },
    #[error("invalid contour: {0}")]
    ContourInvalid(String),
    #[error("coupling incompatible: {0}")]
    CouplingIncompatible(String),
    #[error("removable singularity at lambda = conj(w); perturb the sample point")]
    RemovableSingularity,
    #[error("grid error: {0}")]
    Grid(String),
    #[error("pairing error: {0}")]
    Pairing(String),
    #[error("degenerate kernel: {0}")]
    Degenerate(String),
    #[error("boundary problem undefined: {0}")]
    Inadmissible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Parse,
    Validation,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse(_) => ErrorClass::Parse,
            Error::Dimension(_)
            | Error::Invalid(_)
            | Error::Precondition(_)
            | Error::CouplingIncompatible(_)
            | Error::Grid(_)
            | Error::Pairing(_) => ErrorClass::Validation,
            _ => ErrorClass::Numerical,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
