use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("column is empty")]
    EmptyColumn,
    #[error("NULL or empty value at row {row}")]
    NullValue { row: usize },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("code {code} does not fit in {width} bits")]
    CodeOutOfRange { code: u64, width: u32 },
    #[error("unknown padded code {0:#x}")]
    UnknownCode(u64),
    #[error("{distinct} distinct values exceed the 32-bit code width limit")]
    WidthOverflow { distinct: usize },
    #[error("unsupported predicate: {0}")]
    UnsupportedPredicate(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse { row: usize, column: String, message: String },
    #[error("query syntax: {0}")]
    QuerySyntax(String),
    #[error("store format: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether the error stems from the input data rather than from usage.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::EmptyColumn
                | Error::NullValue { .. }
                | Error::Parse { .. }
                | Error::WidthOverflow { .. }
                | Error::Csv(_)
                | Error::Format(_)
                | Error::UnknownCode(_)
                | Error::Io(_)
        )
    }
}
