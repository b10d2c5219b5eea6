use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate document title {0:?}")]
    DuplicateTitle(String),

    #[error("unknown document title {0:?}")]
    UnknownTitle(String),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("index format mismatch: expected version {expected}, found {found}")]
    IndexVersion { expected: u32, found: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("prompt budget exceeded: {needed} tokens required, limit is {limit}")]
    PromptBudget { needed: usize, limit: usize },

    #[error(transparent)]
    Scorer(#[from] ScorerError),

    #[error("scoring failed for path [{path}]: {source}")]
    PathScoring {
        path: String,
        #[source]
        source: ScorerError,
    },

    #[error("{failed} of {total} questions failed, above the allowed failure rate")]
    TooManyFailures { failed: usize, total: usize },

    #[error("unknown {kind} {name:?}; registered: {available}")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Failures raised by scoring backends, local or remote.
#[derive(Debug, Clone, thiserror::Error)]
pub enum ScorerError {
    #[error("cannot reach scoring backend at {endpoint}: {message}")]
    Connection { endpoint: String, message: String },

    #[error("backend at {endpoint} returned status {status}: {message}")]
    Status {
        endpoint: String,
        status: u16,
        message: String,
    },

    #[error("malformed backend response: {0}")]
    Schema(String),

    #[error("backend returned {got} responses for {expected} requests")]
    CountMismatch { expected: usize, got: usize },

    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("operation not supported by backend: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
