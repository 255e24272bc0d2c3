use std::path::PathBuf;

/// Error type shared by every module in the crate.
///
/// Variants are grouped by failure class rather than by module so callers can
/// map them onto process exit codes without string matching: `Validation` and
/// `Config` mean the input or configuration is wrong, `Incompatible` means an
/// artifact cannot be used (wrong snapshot version, mismatched embedding
/// model), `Provider` wraps upstream API failures, and `Io`/`Serde` are the
/// usual plumbing.
#[derive(Debug, thiserror::Error)]
pub enum CoreError {
    #[error("validation: {0}")]
    Validation(String),

    #[error("config: {0}")]
    Config(String),

    #[error("incompatible artifact: {0}")]
    Incompatible(String),

    #[error("provider {kind}: {message}")]
    Provider { kind: ProviderErrorKind, message: String },

    #[error("pipeline: {0}")]
    Pipeline(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("{context}: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },
}

/// How a provider call failed, after retries were exhausted or skipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProviderErrorKind {
    /// Credentials missing or rejected. Never retried.
    Auth,
    /// Retryable class (429, 5xx, transport) that still failed after the
    /// configured number of attempts.
    Exhausted,
    /// The HTTP exchange succeeded but the body was not in the expected shape.
    Malformed,
    /// Any other terminal response (4xx other than auth/rate-limit).
    Rejected,
}

impl std::fmt::Display for ProviderErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ProviderErrorKind::Auth => "auth",
            ProviderErrorKind::Exhausted => "retries exhausted",
            ProviderErrorKind::Malformed => "malformed response",
            ProviderErrorKind::Rejected => "rejected",
        };
        f.write_str(s)
    }
}

impl CoreError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CoreError::Validation(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CoreError::Config(msg.into())
    }

    pub fn incompatible(msg: impl Into<String>) -> Self {
        CoreError::Incompatible(msg.into())
    }

    pub fn provider(kind: ProviderErrorKind, msg: impl Into<String>) -> Self {
        CoreError::Provider { kind, message: msg.into() }
    }

    pub fn pipeline(msg: impl Into<String>) -> Self {
        CoreError::Pipeline(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CoreError::Io { path: path.into(), source }
    }

    pub fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        CoreError::Json { context: context.into(), source }
    }

    pub fn csv(context: impl Into<String>, source: csv::Error) -> Self {
        CoreError::Csv { context: context.into(), source }
    }
}
