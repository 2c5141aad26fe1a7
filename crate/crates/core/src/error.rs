use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("probability {name} = {value} is outside [0, 1]")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },
    #[error("non-identifiable design: p(yes|1) = {p1} must exceed p(yes|0) = {p0}")]
    NonIdentifiable { p1: f64, p0: f64 },
    #[error("m_items must be at least 1")]
    NoItems,
    #[error("m_items = {0} exceeds the supported maximum of {max}", max = crate::design::MAX_ITEMS)]
    TooManyItems(usize),
    #[error("invalid design config: {0}")]
    DesignConfig(String),

    #[error("rate must be finite and non-negative, got {0}")]
    InvalidRate(f64),

    #[error("parameter vector has length {got}, model expects {expected}")]
    ParamLength { expected: usize, got: usize },
    #[error("predictor vector has length {got}, model expects {expected}")]
    PredictorLength { expected: usize, got: usize },
    #[error("non-finite linear predictor")]
    NonFiniteLinearPredictor,
    #[error("observed sum score {s_star} exceeds m_items = {m}")]
    SumScoreOutOfRange { s_star: usize, m: usize },
    #[error("observation weight must be positive and finite, got {0}")]
    InvalidWeight(f64),
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),
    #[error("no observations")]
    NoData,

    #[error("objective is not finite at a finite-difference probe point")]
    NonFiniteProbe,
    #[error("optimizer did not converge after {starts} start(s); best loglik {loglik}")]
    NonConvergence {
        starts: usize,
        loglik: f64,
        partial: Box<crate::estimation::FitResult>,
    },

    #[error("fitted frequency {fitted} in cell {cell} is below 1e-8; Pearson statistic undefined")]
    FittedCellTooSmall { cell: String, fitted: f64 },
    #[error("predictor category {0} has no observations")]
    EmptyCategory(String),
    #[error("no observed zero sum scores")]
    NoObservedZeros,
    #[error("{0} requires {1}")]
    WrongModel(&'static str, &'static str),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("empty input")]
    EmptyInput,
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("line {line}: column `{column}` has non-numeric value `{value}`")]
    NonNumeric {
        line: u64,
        column: String,
        value: String,
    },
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
