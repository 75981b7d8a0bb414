use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("node `{0}` is not in the graph")]
    MissingNode(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error(
        "{malformed} of {total} lines are malformed; refusing to treat this as a forum export"
    )]
    MostlyMalformed { malformed: usize, total: usize },

    #[error("malformed data: {0}")]
    Data(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("refusing brute-force enumeration over {0} nodes (limit is 10)")]
    TooLarge(usize),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
