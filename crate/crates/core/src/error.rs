use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A search ran out of its node budget before certifying an answer.
    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),

    /// A construction that is supposed to be k-AP-free produced a progression.
    /// This indicates a bug, not bad input.
    #[error("construction unsound: {0}")]
    Unsound(String),

    /// Dependent random choice failed every attempt.
    #[error("extraction failed after {attempts} attempts: {detail}")]
    ExtractionFailed { attempts: u32, detail: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// A cache or input file did not parse.
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
