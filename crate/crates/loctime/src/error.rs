use thiserror::Error;

/// Errors surfaced by fallible operations across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("path has {available} completed zero-excursions, need at least {required}")]
    InsufficientExcursions { required: u64, available: u64 },

    #[error("path has {available} downcrossings at level {level}, need {required}")]
    InsufficientDowncrossings {
        level: i64,
        required: u64,
        available: u64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("KS test requires a continuous target law; route discrete laws to chi_square_test")]
    DiscreteLawForKs,

    #[error("KS test requires at least 100 samples, got {0}")]
    TooFewSamples(usize),

    #[error("degenerate binning: {0}")]
    DegenerateBinning(String),

    #[error("too few samples for requested u range: {0}")]
    TooFewForTail(String),

    #[error("unknown experiment id `{0}`")]
    UnknownExperiment(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed report input: {0}")]
    MalformedReport(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
