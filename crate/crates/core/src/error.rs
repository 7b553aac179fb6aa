use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid constellation order {0}")]
    InvalidOrder(usize),
    #[error("unsupported constellation order {0} (only square QAM with even side)")]
    UnsupportedOrder(usize),
    #[error("invalid constellation geometry: {0}")]
    InvalidGeometry(String),
    #[error("degenerate constellation: {0}")]
    DegenerateConstellation(String),
    #[error("constellation violates a moment assumption: {0}")]
    InvalidConstellation(String),
    #[error("moment matrix requires zero pseudo-variance; {0} violates it")]
    UnsupportedMomentStructure(String),
    #[error("unsupported basis size {0}: {1}")]
    UnsupportedSize(usize, &'static str),
    #[error("phase entry {index} has modulus {modulus}, expected 1")]
    InvalidPhase { index: usize, modulus: f64 },
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("matrix is not unitary (max |U^H U - I| = {0:e})")]
    NotUnitary(f64),
    #[error("lag {k} out of range for length {n}")]
    InvalidLag { k: usize, n: usize },
    #[error("direction matrix is not Hermitian (max asymmetry {0:e})")]
    InvalidDirection(f64),
    #[error("target at bin {bin} falls outside the {n}-sample cyclic window")]
    OutOfWindow { bin: usize, n: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("cannot parse `{token}`: {reason}")]
    Parse { token: String, reason: String },
}

impl Error {
    pub(crate) fn parse(token: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            token: token.into(),
            reason: reason.into(),
        }
    }
}
