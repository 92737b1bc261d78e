use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {what}: {message}")]
    Parse { what: String, message: String },

    #[error("layer {layer}: {message}")]
    DimensionChain { layer: usize, message: String },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid input domain: {0}")]
    InvalidDomain(String),

    #[error("dataset row {row} lies outside the input domain")]
    OutsideDomain { row: usize },

    #[error("invalid linear program: {0}")]
    InvalidModel(String),

    #[error("LP solver numerical failure: {0}")]
    Numerical(String),

    #[error("instance too large for enumeration: {neurons} hidden neurons (limit {limit})")]
    TooLarge { neurons: usize, limit: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(what: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            what: what.into(),
            message: message.to_string(),
        }
    }
}
