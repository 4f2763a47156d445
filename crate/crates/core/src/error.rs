use thiserror::Error;

/// Errors raised by the linear algebra, channel and automaton layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NonHermitian { residual: f64 },

    #[error("{0} did not converge")]
    ConvergenceFailure(&'static str),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid density operator: {0}")]
    InvalidState(String),

    #[error("invalid automaton: {0}")]
    InvalidAutomaton(String),

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("ill-conditioned spectral projector (condition number {condition:.3e})")]
    IllConditionedProjector { condition: f64 },

    #[error("found {found} independent invariant states, expected {expected}")]
    SpanDeficit { expected: usize, found: usize },

    #[error("subspace is not an enclosure")]
    NotAnEnclosure,

    #[error("minimal enclosure decomposition failed: {0}")]
    DecompositionFailure(String),

    #[error("non-finite matrix entry")]
    NonFinite,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("at p = {p}: {source}")]
    AtGridPoint { p: f64, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dims(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        if let Error::AtGridPoint { source, .. } = self {
            return source.is_numerical();
        }
        matches!(
            self,
            Error::ConvergenceFailure(_)
                | Error::IllConditionedProjector { .. }
                | Error::SpanDeficit { .. }
                | Error::DecompositionFailure(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
