use thiserror::Error;

/// Errors raised by the library's public operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown benchmark game `{0}`")]
    UnknownGame(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("exploration floor {floor} is infeasible for {actions} actions")]
    InfeasibleFloor { floor: f64, actions: usize },

    #[error("action index {index} out of range for {actions} actions")]
    ActionIndex { index: usize, actions: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no full revolution within time {horizon}")]
    NoRevolution { horizon: f64 },

    #[error("game file line {line}: {message}")]
    GameFile { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
