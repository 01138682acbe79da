use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The problem has no solution with the given input bound, e.g. the
    /// input cannot overcome gravity.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Parameters sit on a singular branch of the closed-form solution.
    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("no convergence ({context}); best residual {best_residual:.3e}")]
    Convergence { context: String, best_residual: f64 },

    #[error("segment {segment}: {source}")]
    Segment {
        segment: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
}
