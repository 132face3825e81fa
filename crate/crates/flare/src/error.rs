use std::fmt;
use std::str::FromStr;

use flare_core::{snapshot::SnapshotError, CoreError, ValidationError};

/// Wire error codes. Every [`FlareError`] maps to exactly one of these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    InvalidKey,
    UnknownApp,
    Unauthenticated,
    Forbidden,
    NotFound,
    DuplicateUsername,
    ValidationError,
    UnknownProvider,
    UnsupportedFeature,
    ProviderError,
    CorruptLog,
    StorageFull,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 12] = [
        ErrorCode::InvalidKey,
        ErrorCode::UnknownApp,
        ErrorCode::Unauthenticated,
        ErrorCode::Forbidden,
        ErrorCode::NotFound,
        ErrorCode::DuplicateUsername,
        ErrorCode::ValidationError,
        ErrorCode::UnknownProvider,
        ErrorCode::UnsupportedFeature,
        ErrorCode::ProviderError,
        ErrorCode::CorruptLog,
        ErrorCode::StorageFull,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::InvalidKey => "invalid_key",
            ErrorCode::UnknownApp => "unknown_app",
            ErrorCode::Unauthenticated => "unauthenticated",
            ErrorCode::Forbidden => "forbidden",
            ErrorCode::NotFound => "not_found",
            ErrorCode::DuplicateUsername => "duplicate_username",
            ErrorCode::ValidationError => "validation_error",
            ErrorCode::UnknownProvider => "unknown_provider",
            ErrorCode::UnsupportedFeature => "unsupported_feature",
            ErrorCode::ProviderError => "provider_error",
            ErrorCode::CorruptLog => "corrupt_log",
            ErrorCode::StorageFull => "storage_full",
        }
    }

    pub fn http_status(self) -> u16 {
        match self {
            ErrorCode::ValidationError | ErrorCode::UnsupportedFeature => 400,
            ErrorCode::InvalidKey | ErrorCode::Unauthenticated => 401,
            ErrorCode::Forbidden => 403,
            ErrorCode::NotFound | ErrorCode::UnknownApp | ErrorCode::UnknownProvider => 404,
            ErrorCode::DuplicateUsername => 409,
            ErrorCode::ProviderError => 502,
            ErrorCode::CorruptLog | ErrorCode::StorageFull => 500,
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErrorCode {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Self::ALL.into_iter().find(|c| c.as_str() == s).ok_or(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FlareError {
    #[error("invalid developer key")]
    InvalidKey,
    #[error("unknown app {0}")]
    UnknownApp(String),
    #[error("authentication required")]
    Unauthenticated,
    #[error("not permitted")]
    Forbidden,
    #[error("{0} not found")]
    NotFound(String),
    #[error("invalid or revoked handle")]
    InvalidHandle,
    #[error("unknown service group {0}")]
    UnknownGroup(String),
    #[error("username {0} is taken")]
    DuplicateUsername(String),
    #[error("{0}")]
    Validation(String),
    #[error("unknown provider {0}")]
    UnknownProvider(String),
    #[error("feature {0} is not supported by this provider")]
    UnsupportedFeature(String),
    #[error("provider rejected the credentials")]
    ProviderAuthFailed,
    #[error("provider error: {0}")]
    Provider(String),
    #[error("corrupt log: {0}")]
    CorruptLog(String),
    #[error("storage failure: {0}")]
    StorageFull(String),
}

impl FlareError {
    pub fn code(&self) -> ErrorCode {
        match self {
            FlareError::InvalidKey => ErrorCode::InvalidKey,
            FlareError::UnknownApp(_) => ErrorCode::UnknownApp,
            FlareError::Unauthenticated => ErrorCode::Unauthenticated,
            FlareError::Forbidden => ErrorCode::Forbidden,
            FlareError::NotFound(_) | FlareError::InvalidHandle | FlareError::UnknownGroup(_) => {
                ErrorCode::NotFound
            }
            FlareError::DuplicateUsername(_) => ErrorCode::DuplicateUsername,
            FlareError::Validation(_) => ErrorCode::ValidationError,
            FlareError::UnknownProvider(_) => ErrorCode::UnknownProvider,
            FlareError::UnsupportedFeature(_) => ErrorCode::UnsupportedFeature,
            FlareError::ProviderAuthFailed | FlareError::Provider(_) => ErrorCode::ProviderError,
            FlareError::CorruptLog(_) => ErrorCode::CorruptLog,
            FlareError::StorageFull(_) => ErrorCode::StorageFull,
        }
    }

    pub fn validation(msg: impl fmt::Display) -> Self {
        FlareError::Validation(msg.to_string())
    }
}

impl From<ValidationError> for FlareError {
    fn from(e: ValidationError) -> Self {
        FlareError::Validation(e.to_string())
    }
}

impl From<CoreError> for FlareError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Validation(v) => v.into(),
            CoreError::NotFound(id) => FlareError::NotFound(format!("record {id}")),
            e @ CoreError::Inconsistent { .. } => FlareError::CorruptLog(e.to_string()),
        }
    }
}

impl From<SnapshotError> for FlareError {
    fn from(e: SnapshotError) -> Self {
        FlareError::CorruptLog(format!("snapshot: {e}"))
    }
}

impl From<std::io::Error> for FlareError {
    fn from(e: std::io::Error) -> Self {
        FlareError::StorageFull(e.to_string())
    }
}

pub type Result<T, E = FlareError> = std::result::Result<T, E>;
