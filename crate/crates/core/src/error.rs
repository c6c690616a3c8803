use thiserror::Error;

/// Errors raised by the configuration laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two points are (numerically) coincident where the potential is singular.
    #[error("singular pair ({i}, {j}): 1 - x_i.x_j = {gap:e}")]
    SingularPair { i: usize, j: usize, gap: f64 },

    #[error("gauge-singular coordinates: {0}")]
    GaugeSingular(String),

    #[error("configuration spans the whole ambient space")]
    NotDegenerate,

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("configuration is not stationary (max residual {0:e})")]
    NonStationary(f64),

    #[error("classification failed: {0}")]
    ClassificationFailed(String),

    #[error("no sign change of the gap on [{lo}, {hi}]")]
    BracketInvalid { lo: f64, hi: f64 },

    #[error("i/o: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::SingularPair { .. }
                | Error::GaugeSingular(_)
                | Error::NonStationary(_)
                | Error::ClassificationFailed(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
