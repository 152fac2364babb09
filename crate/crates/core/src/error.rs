use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("path created at level {created} cannot answer a query at level {requested}")]
    LevelTooFine { created: u32, requested: u32 },

    #[error("time {t} lies outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },

    #[error("problem '{0}' has no pathwise oracle")]
    NoPathwiseOracle(String),

    #[error("unknown problem '{0}'")]
    UnknownProblem(String),

    #[error("characteristic roots coincide (x1 = {x1}, x2 = {x2})")]
    DegenerateRoots { x1: String, x2: String },

    #[error("resource limit: {what} needs {required}, ceiling is {ceiling}")]
    ResourceLimit {
        what: &'static str,
        required: u128,
        ceiling: u128,
    },

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
