use thiserror::Error;

pub type Result<T> = std::result::Result<T, GknnError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GknnError {
    #[error("predictor vector must have at least one component")]
    EmptyPredictor,

    #[error("non-finite value {value} in component {component}")]
    NonFinite { component: usize, value: f64 },

    #[error("invalid yield {0}: yields must be finite and non-negative")]
    InvalidYield(f64),

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("metric: {0}")]
    InvalidMetric(String),

    #[error("no training record carries month label {0}")]
    NoCandidates(f64),

    #[error("rank distribution support {support} exceeds {available} candidate records")]
    SupportTooLarge { support: usize, available: usize },

    #[error("k = {k} out of range 1..={n}")]
    KOutOfRange { k: usize, n: usize },

    #[error("invalid rank distribution: {0}")]
    InvalidDistribution(String),

    #[error("length mismatch: {what} has {actual} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("series length {0} is not a whole number of years (multiple of 12)")]
    NotWholeYears(usize),

    #[error("empty series")]
    EmptySeries,

    #[error("need at least {needed} runs, got {got}")]
    TooFewRuns { needed: usize, got: usize },

    #[error("provenance mismatch: {0}")]
    Provenance(String),

    #[error("invalid interval ({a}, {b}): lower end must be below upper end")]
    InvalidInterval { a: f64, b: f64 },

    #[error("invalid evaluation grid: {0}")]
    InvalidGrid(String),

    #[error("need at least {needed} training records, got {got}")]
    TooFewRecords { needed: usize, got: usize },

    #[error("month label {0} outside 1..=12")]
    InvalidMonth(i64),

    #[error("record {index} has no month label")]
    MissingMonthLabel { index: usize },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("tank configuration: {0}")]
    InvalidConfig(String),

    #[error("climate record: {0}")]
    InvalidClimate(String),
}
