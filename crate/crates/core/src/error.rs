use std::fmt;

/// Errors produced by every module of the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid group descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("level too large: quotient size {size} exceeds the cap {cap}")]
    LevelTooLarge { size: u128, cap: u64 },
    #[error("group mismatch: {0}")]
    GroupMismatch(String),
    #[error("dual index {0} is finer than the level")]
    LevelTooCoarse(String),
    #[error("level mismatch: {0}")]
    LevelMismatch(String),
    #[error("bad exponent: {0}")]
    BadExponent(String),
    #[error("syntax error at {line}:{col}: expected {expected}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
    },
    #[error("evaluation error at {line}:{col}: {reason}")]
    Eval {
        line: usize,
        col: usize,
        reason: String,
    },
    #[error("dense object of size {size} exceeds the cap {cap}")]
    MatrixTooLarge { size: usize, cap: usize },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("matrix is singular: {0}")]
    SingularMatrix(String),
    #[error("symbol minus lambda vanishes at grid node (x={x}, xi={xi})")]
    SymbolZero { x: usize, xi: usize },
    #[error("empty grid: {0}")]
    EmptyGrid(String),
    #[error("format error at offset {offset}: {reason}")]
    Format { offset: u64, reason: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code, used by the CLI as `error[CODE]:`.
    pub fn code(&self) -> ErrorCode {
        match self {
            Error::InvalidDescriptor(_) | Error::LevelTooLarge { .. } => ErrorCode::Config,
            Error::GroupMismatch(_) | Error::LevelTooCoarse(_) | Error::LevelMismatch(_) => {
                ErrorCode::Config
            }
            Error::BadExponent(_) | Error::MatrixTooLarge { .. } | Error::EmptyGrid(_) => {
                ErrorCode::Config
            }
            Error::Syntax { .. } => ErrorCode::Parse,
            Error::Eval { .. } => ErrorCode::Eval,
            Error::NumericalFailure(_) | Error::SingularMatrix(_) | Error::SymbolZero { .. } => {
                ErrorCode::Numeric
            }
            Error::Format { .. } => ErrorCode::Format,
            Error::Io(_) => ErrorCode::Io,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    Config,
    Parse,
    Eval,
    Numeric,
    Format,
    Io,
}

impl ErrorCode {
    pub fn is_numerical(self) -> bool {
        self == ErrorCode::Numeric
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorCode::Config => "CONFIG",
            ErrorCode::Parse => "PARSE",
            ErrorCode::Eval => "EVAL",
            ErrorCode::Numeric => "NUMERIC",
            ErrorCode::Format => "FORMAT",
            ErrorCode::Io => "IO",
        })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
