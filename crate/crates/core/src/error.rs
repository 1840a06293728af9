use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported channel: {0}")]
    UnsupportedChannel(String),

    #[error("Blahut-Arimoto did not converge after {iterations} iterations (gap {gap:e})")]
    NonConvergence { iterations: usize, gap: f64 },

    #[error("invalid codec state: {0}")]
    InvalidState(String),

    #[error("support of {size} strings exceeds the exhaustive-search cap of {cap}")]
    SupportTooLarge { size: usize, cap: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("trial {index}: {source}")]
    Trial {
        index: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for errors that indicate broken codec bookkeeping rather than bad input.
    pub fn is_invariant_failure(&self) -> bool {
        match self {
            Error::Invariant(_) | Error::InvalidState(_) => true,
            Error::Trial { source, .. } => source.is_invariant_failure(),
            _ => false,
        }
    }
}
