use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed CHAT transcript: {0}")]
    MalformedChat(String),

    #[error("input is not valid UTF-8: {0}")]
    InvalidUtf8(#[from] std::str::Utf8Error),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("unknown CIU id {0} (valid ids are 1..=23)")]
    UnknownCiuId(i64),

    #[error("conflicting lexicon entry for {word:?}: {detail}")]
    ConflictingEntry { word: String, detail: String },

    #[error("point ({x}, {y}) lies outside the {width}x{height} image")]
    OutOfBounds { x: f64, y: f64, width: f64, height: f64 },

    #[error("no coordinate for CIU {0}")]
    MissingCoordinate(u8),

    #[error("design matrix is rank deficient: column {0:?} is linearly dependent")]
    RankDeficient(String),

    #[error("too few rows: {rows} observations for {cols} parameters")]
    TooFewRows { rows: usize, cols: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid synthetic cohort spec: {0}")]
    Spec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn schema(msg: impl Into<String>) -> Self {
        Error::Schema(msg.into())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Schema(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Schema(err.to_string())
    }
}
