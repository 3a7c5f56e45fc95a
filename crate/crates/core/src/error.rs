use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("baseline and candidate keys differ ({} offending): {}", .total, .keys.join(", "))]
    Mismatch { keys: Vec<String>, total: usize },

    #[error("task `{0}` has no paired documents")]
    EmptyTask(String),

    #[error("non-binary score for document `{doc_id}` in task `{task}`")]
    NonBinaryScore { task: String, doc_id: String },

    #[error("every task has zero disagreements; max-drop statistic is undefined")]
    AllDegenerate,

    #[error("task `{task}` has {n} document(s); at least 2 are required")]
    TaskTooSmall { task: String, n: usize },

    #[error("{path}:{line}: parse error: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("{path}:{line}: score {score} outside [0, 1]")]
    Range { path: String, line: usize, score: f64 },

    #[error("{path}:{line}: duplicate key {key}")]
    DuplicateKey { path: String, line: usize, key: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short machine-readable tag, used for JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Mismatch { .. } => "mismatch",
            Error::EmptyTask(_) => "empty_task",
            Error::NonBinaryScore { .. } => "non_binary_score",
            Error::AllDegenerate => "all_degenerate",
            Error::TaskTooSmall { .. } => "task_too_small",
            Error::Parse { .. } => "parse",
            Error::Range { .. } => "range",
            Error::DuplicateKey { .. } => "duplicate_key",
            Error::Io { .. } => "io",
        }
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
