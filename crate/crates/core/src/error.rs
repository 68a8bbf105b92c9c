use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("column `{0}` has zero norm")]
    DegenerateColumn(String),
    #[error("design is rank deficient; dependent columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),
    #[error("non-finite value in sweep {sweep}")]
    Numerical { sweep: usize },
    #[error("data error: {0}")]
    Data(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("{failed} of {total} bootstrap replicates failed (first: {first})")]
    BootstrapFailures {
        failed: usize,
        total: usize,
        first: String,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
