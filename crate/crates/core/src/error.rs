use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("row {row} not stochastic: sums to {sum}")]
    RowNotStochastic { row: usize, sum: f64 },
    #[error("fitness levels must satisfy 0 = chi(0) < ... < chi(d-1) = 1")]
    FitnessNotIncreasing,
    #[error("selection out of range: S = {s} not in [0, {n}]")]
    SelectionOutOfRange { s: f64, n: usize },
    #[error("no unique stationary law: {0}")]
    NoUniqueStationaryLaw(String),
    #[error("exact solve infeasible: {states} states exceeds cap {cap}")]
    ExactSolveInfeasible { states: usize, cap: usize },
    #[error("sample larger than population: {requested} > {population}")]
    SampleTooLarge { requested: usize, population: usize },
    #[error("moment computation not possible: {0}")]
    MomentDomain(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("target time {target} precedes current time {now}")]
    TimeBeforeNow { target: f64, now: f64 },
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("h positivity violated: {0}")]
    PositivityViolated(String),
    #[error("truncation error above budget at n_max = {n_max}; try a larger n_max")]
    TruncationBudget { n_max: usize },
    #[error("singular linear system")]
    Singular,
    #[error("conditioning event has zero estimated probability")]
    ZeroProbabilityConditioning,
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("config error at `{key}`: {msg}")]
    Config { key: String, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
