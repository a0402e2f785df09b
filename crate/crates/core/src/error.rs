use thiserror::Error;

/// Errors produced by data ingestion, the tests and the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// Input document does not conform to the expected schema.
    #[error("malformed input: {0}")]
    MalformedInput(String),

    /// Counts violate a trial-summary invariant.
    #[error("invalid counts: {0}")]
    InvalidCounts(String),

    /// An operation requiring records received none.
    #[error("empty input")]
    EmptyInput,

    /// An event count needed by a ratio or variance is zero.
    #[error("zero events in arm {arm}, period {period}")]
    ZeroEvents { arm: u8, period: u8 },

    /// The summary's denominator mode does not support this operation.
    #[error("wrong mode: {0}")]
    WrongMode(String),

    /// Too many bootstrap resamples had empty cells.
    #[error("degenerate resampling: {0}")]
    DegenerateResampling(String),

    /// The requested waning factor cannot be realized by the scenario.
    #[error(
        "infeasible transition rate {required:.6} > 1 (maximum feasible waning factor {max_w:.6})"
    )]
    Infeasible { required: f64, max_w: f64 },

    /// The scenario transitions out of a stratum with zero probability.
    #[error("scenario stratum `{0}` has zero probability")]
    ZeroStratum(&'static str),

    /// A ratio denominator is zero.
    #[error("zero denominator: {0}")]
    ZeroDenominator(String),

    /// A numeric argument is outside its domain.
    #[error("domain error: {0}")]
    DomainError(String),

    /// A precondition on an argument was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
