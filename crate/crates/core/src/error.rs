use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension: {0}")]
    Dimension(String),

    #[error("parameter: {0}")]
    Parameter(String),

    #[error("definiteness: {0}")]
    Definiteness(String),

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("convergence: {0}")]
    Convergence(String),

    #[error("csv: line {line}: {msg}")]
    Csv { line: usize, msg: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// A Monte Carlo replicate failed; carries the stream coordinates needed to rerun it.
    #[error("replicate (n={n}, p={p}, rep={rep}, seed={seed}) failed: {source}")]
    Replicate {
        n: usize,
        p: usize,
        rep: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// Short machine-readable prefix used by the CLI on the diagnostic stream.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::Parameter(_) => "parameter",
            Error::Definiteness(_) => "definiteness",
            Error::InsufficientData { .. } => "insufficient-data",
            Error::Convergence(_) => "convergence",
            Error::Csv { .. } => "csv",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
            Error::Replicate { source, .. } => source.kind(),
        }
    }
}
