use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("ill-conditioned set: {0}")]
    IllConditionedSet(String),

    #[error("invalid stepsize: {0}")]
    InvalidStepsize(String),

    #[error("iterate diverged at iteration {iteration} (norm {norm:e})")]
    Divergence { iteration: usize, norm: f64 },

    #[error("inexact inner solve: {iterations} iterations reached with residual {residual:e}")]
    InexactInnerSolve { iterations: usize, residual: f64 },

    #[error("batch solve did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular Hessian: {0}")]
    SingularHessian(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown benchmark `{0}`")]
    NotFound(String),

    #[error("sample {index}: {source}")]
    AtSample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("grid point {label}: {source}")]
    AtGridPoint {
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error("spec error: {0}")]
    Spec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn at_sample(self, index: usize) -> Self {
        match self {
            e @ Error::AtSample { .. } => e,
            e => Error::AtSample {
                index,
                source: Box::new(e),
            },
        }
    }

    /// Strips any sample-index wrapping.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtSample { source, .. } | Error::AtGridPoint { source, .. } => source.root(),
            e => e,
        }
    }
}
