use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{message} (line {line})")]
    Parse { line: u64, message: String },

    #[error("no data rows")]
    NoDataRows,

    #[error("stratum {0} is not a 1:1 discordant pair")]
    NotDiscordantPair(String),

    #[error("stratum {id}: predictor value {value} is not binary")]
    NonBinaryPredictor { id: String, value: f64 },

    #[error("stratum {0} carries no information (all cases or all controls)")]
    UninformativeStratum(String),

    #[error("stratum {id} has {size} members; enumeration is limited to {limit}")]
    StratumTooLarge {
        id: String,
        size: usize,
        limit: usize,
    },

    #[error("duplicate stratum id {0}")]
    DuplicateStratum(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix not symmetric")]
    NotSymmetric,

    #[error("matrix not positive definite")]
    NotPositiveDefinite,

    #[error("covariance singular")]
    CovarianceSingular,

    #[error("second-moment matrix singular")]
    SecondMomentSingular,

    #[error("no discordant pairs: statistic undefined")]
    NoDiscordantPairs,

    #[error("need at least {needed} pairs, found {found}")]
    TooFewPairs { needed: usize, found: usize },

    #[error("MLE unavailable: {0}")]
    MleUnavailable(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("empty sample")]
    EmptySample,

    #[error("zero-width histogram range")]
    ZeroWidthRange,

    #[error("{degenerate} of {reps} replicates were degenerate (limit 10%)")]
    TooManyDegenerate { degenerate: usize, reps: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
