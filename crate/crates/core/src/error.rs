use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range (size {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("non-finite value encountered")]
    NonFinite,

    #[error("measurement accumulator is empty")]
    EmptyAccumulator,

    #[error("infeasible coordinate coverage: {0}")]
    InfeasibleCoverage(String),

    #[error("trimming with b = {b} needs at least {needed} values, got {got}")]
    TooFewValues { got: usize, needed: usize, b: usize },

    #[error("enumeration budget exceeded: {count:.3e} candidates > budget {budget}")]
    BudgetExceeded { count: f64, budget: u64 },

    #[error("iterative Byzantine consensus not achievable: a reduced graph has {sources} source components")]
    IabcFailure { sources: usize },

    #[error("fault budget exceeded: {faulty} faulty agents but b = {b}")]
    FaultBudgetExceeded { faulty: usize, b: usize },

    #[error("no good agent has a strictly contracting column for coordinate {0}")]
    NoStrictObserver(usize),

    #[error("adversary produced no message from {from} to {to}")]
    MissingMessage { from: usize, to: usize },

    #[error("graph parse error on line {line}: {msg}")]
    GraphParse { line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("argument out of domain: {0}")]
    Domain(String),
}

impl Error {
    /// Errors caused by the caller's setup rather than by something that
    /// happened while running.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::FaultBudgetExceeded { .. }
                | Error::GraphParse { .. }
                | Error::InfeasibleCoverage(_)
                | Error::DimensionMismatch { .. }
                | Error::Domain(_)
        )
    }
}
