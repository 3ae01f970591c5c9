use thiserror::Error;

/// Errors produced by the simulation and exact-computation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("flip probability q = {0} is outside [0, 1]")]
    InvalidFlipProbability(f64),

    #[error("a tree needs at least one vertex")]
    EmptyTree,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("horizon N = {n} exceeds the exact-computation cap of {cap}")]
    CapExceeded { n: u64, cap: u64 },

    #[error("Y(n) is undefined at n = {0}: the combined process is zero")]
    ZeroCombined(u64),

    #[error("event A is undefined for alpha = 0")]
    EventUndefinedForZeroAlpha,

    #[error("the escape boundary A is undefined at q = 0")]
    ZeroFlipProbability,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by caller-supplied input rather than runtime failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Invariant(_) | Error::Io(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_q(q: f64) -> Result<()> {
    if (0.0..=1.0).contains(&q) {
        Ok(())
    } else {
        Err(Error::InvalidFlipProbability(q))
    }
}
