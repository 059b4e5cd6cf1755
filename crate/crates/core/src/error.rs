use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input out of domain: {0}")]
    InputDomain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("observation width {got} does not match network input width {expected}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("exhaustive search over 2^{n} action vectors exceeds the cap of 2^{cap}")]
    CombinatorialLimit { n: usize, cap: usize },

    #[error("non-finite {net} loss at BS {bs} on update {update}: {detail}")]
    NonFiniteLoss {
        bs: usize,
        net: &'static str,
        update: u64,
        detail: String,
    },

    #[error("schema error in {path}: {detail}")]
    Schema { path: PathBuf, detail: String },

    #[error("unsupported file version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable, machine-readable category, used for CLI exit codes.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InputDomain(_) => "input-domain",
            Error::Config(_) => "config",
            Error::WidthMismatch { .. } => "width-mismatch",
            Error::CombinatorialLimit { .. } => "combinatorial-limit",
            Error::NonFiniteLoss { .. } => "non-finite-loss",
            Error::Schema { .. } => "schema",
            Error::Version { .. } => "version",
            Error::Io { .. } => "io",
            Error::Serde(_) | Error::Csv(_) => "serialization",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::InputDomain(_) | Error::WidthMismatch { .. } | Error::CombinatorialLimit { .. } => 3,
            Error::NonFiniteLoss { .. } => 4,
            Error::Schema { .. } | Error::Version { .. } => 5,
            Error::Io { .. } => 6,
            Error::Serde(_) | Error::Csv(_) => 7,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Config(e.to_string())
    }
}
