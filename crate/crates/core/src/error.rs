use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad argument or violated precondition.
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Integration step violates the resolution rule.
    #[error("step dt = {dt:.4e} s exceeds the {scale} limit {limit:.4e} s")]
    StepTooLarge {
        dt: f64,
        limit: f64,
        scale: &'static str,
    },

    #[error("non-finite state at t = {t:.6e} s")]
    NonFinite { t: f64 },

    #[error("control pulses overlap: #{first} ends at {end:.6e} s, #{second} starts at {start:.6e} s")]
    PulseOverlap {
        first: usize,
        second: usize,
        end: f64,
        start: f64,
    },

    #[error("csv: {0}")]
    Csv(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True when the failure comes from the numerics rather than the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
