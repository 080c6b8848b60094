use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config parse error: {0}")]
    Parse(String),

    /// A field is missing or has the wrong type/shape.
    #[error("config field `{field}`: {msg}")]
    Schema { field: String, msg: String },

    /// A geometric or physical invariant does not hold.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("LED index ({col}, {row}) outside {cols}x{rows} panel")]
    PixelOutOfBounds { col: i64, row: i64, cols: usize, rows: usize },

    #[error("placement region too small: {0}")]
    RegionTooSmall(String),

    #[error("internal consistency: {0}")]
    Consistency(String),

    #[error("{0} is undefined for a zero-mean region")]
    ZeroMean(&'static str),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("malformed {what}: {msg}")]
    Format { what: &'static str, msg: String },

    #[error("unknown {what} `{name}`")]
    Unknown { what: &'static str, name: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn schema(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Schema { field: field.into(), msg: msg.into() }
    }

    /// True for errors caused by bad user configuration.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Parse(_) | Error::Schema { .. } | Error::Invariant(_) | Error::RegionTooSmall(_))
    }
}
