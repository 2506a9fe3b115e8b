use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("profiles not strictly ordered: f1 = {f1} >= f2 = {f2} at x' = ({x1}, {x2})")]
    Ordering { x1: f64, x2: f64, f1: f64, f2: f64 },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("geometry has no parallel offset (f2 is not f1 + a)")]
    NotParallel,

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("conjugate gradient did not converge: relative residual {residual:e} after {iterations} iterations")]
    NotConverged { residual: f64, iterations: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite(_) | Error::NotConverged { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
