use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} cap exceeded: n = {n} > {cap}")]
    CapExceeded { what: &'static str, n: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("graph generation failed after {attempts} attempts (n = {n}, d = {d})")]
    GraphGeneration { n: usize, d: usize, attempts: usize },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("rank-deficient least-squares design (degree {degree}, {points} points)")]
    RankDeficient { degree: usize, points: usize },

    #[error("fitted curve is not positive: min {min_value:e} at s = {at}")]
    NonPositiveCurve { min_value: f64, at: f64 },

    #[error("objective returned a non-finite value {value} at {params:?}")]
    NonFiniteObjective { value: f64, params: Vec<f64> },

    #[error("integration step size underflow at s = {at}")]
    StepUnderflow { at: f64 },

    #[error("instance {index}: {source}")]
    Instance {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn at_instance(self, index: usize) -> Self {
        Error::Instance {
            index,
            source: Box::new(self),
        }
    }
}
