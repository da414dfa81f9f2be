use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Stable diagnostic codes for configuration problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Code {
    Parse,
    UnknownKey,
    MissingKey,
    MissingSeed,
    Domain,
    UnknownAlgorithm,
    UnknownSystem,
}

impl Code {
    pub fn as_str(&self) -> &'static str {
        match self {
            Code::Parse => "E-PARSE",
            Code::UnknownKey => "E-UNKNOWN-KEY",
            Code::MissingKey => "E-MISSING-KEY",
            Code::MissingSeed => "E-MISSING-SEED",
            Code::Domain => "E-DOMAIN",
            Code::UnknownAlgorithm => "E-UNKNOWN-ALGORITHM",
            Code::UnknownSystem => "E-UNKNOWN-SYSTEM",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{code}: {message}")]
pub struct ConfigError {
    pub code: Code,
    pub message: String,
}

impl ConfigError {
    pub fn new(code: Code, message: impl Into<String>) -> Self {
        ConfigError { code, message: message.into() }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] setquant::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: malformed report: {source}")]
    Report { path: PathBuf, source: serde_json::Error },
    #[error("E-DIGEST: scope digests differ ({a} vs {b}); pass --force to compare anyway")]
    DigestMismatch { a: String, b: String },
    #[error("E-RESOLUTION: {0}")]
    Resolution(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Diagnostic code, when the error carries one.
    pub fn code(&self) -> Option<&'static str> {
        match self {
            CliError::Config(e) => Some(e.code.as_str()),
            CliError::DigestMismatch { .. } => Some("E-DIGEST"),
            CliError::Resolution(_) => Some("E-RESOLUTION"),
            _ => None,
        }
    }
}
