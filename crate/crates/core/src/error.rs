use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("ambient dimension {0} unsupported (need 3 <= n <= 6)")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("vector is not on the unit sphere (|x| = {norm})")]
    NotUnit { norm: f64 },

    #[error("frame construction degenerated at pivot {0}")]
    DegenerateFrame(usize),

    #[error("point too close to the projection pole (<x, xi> = {0})")]
    PoleSingularity(f64),

    #[error("matrix is not a rotation: {0}")]
    NotRotation(String),

    #[error("lambda must be positive and finite, got {0}")]
    InvalidLambda(f64),

    #[error("matrix is singular (|det| = {0:e})")]
    SingularMatrix(f64),

    #[error("matrix is not orientation preserving (det = {0:e})")]
    NotOrientationPreserving(f64),

    #[error("eps must lie in [0, 1), got {0}")]
    InvalidEps(f64),

    #[error("field has no exact harmonic extension")]
    NotBandLimited,

    #[error("quadrature would need {requested} nodes, cap is {cap}")]
    ResourceLimit { requested: usize, cap: usize },

    #[error("invalid quadrature level {0}")]
    InvalidLevel(usize),

    #[error("centering failed: best |F| = {best:e} > tol = {tol:e}")]
    CenteringFailed { best: f64, tol: f64 },

    #[error("malformed map spec: {0}")]
    MalformedSpec(String),

    #[error("unknown suite '{0}'")]
    UnknownSuite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(n: usize) -> Result<()> {
    if (3..=6).contains(&n) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(n))
    }
}
