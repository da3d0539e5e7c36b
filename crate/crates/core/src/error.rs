use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bounding box: {0}")]
    InvalidBox(String),

    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),

    #[error("embedding dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate embedding: zero norm")]
    DegenerateEmbedding,

    #[error("no templates to average")]
    NoTemplates,

    #[error("line {line}: parse error: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: invalid value for `{field}`: {message}")]
    Validation {
        line: u64,
        field: String,
        message: String,
    },

    #[error("line {line}: frame {frame} follows frame {previous}")]
    Ordering {
        line: u64,
        frame: u64,
        previous: u64,
    },

    #[error("tracklet {0} is dead")]
    Lifecycle(u64),

    #[error("frame {frame} is not after the last processed frame {last}")]
    FrameRegression { frame: u64, last: u64 },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(line: u64, field: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            line,
            field: field.to_string(),
            message: message.into(),
        }
    }
}
