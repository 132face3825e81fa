use alloc::string::String;

use crate::id::RecordId;

/// Input that violates a name, size or shape rule.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidationError {
    #[error("invalid field name {0:?}: expected [a-z0-9_]{{1,64}}")]
    FieldName(String),
    #[error("invalid collection name {0:?}: expected [a-z0-9_-]{{1,64}}")]
    Collection(String),
    #[error("a record needs at least one field")]
    NoFields,
    #[error("a query needs at least one field name")]
    NoQueryFields,
    #[error("field {field} is {len} bytes, limit is {limit}")]
    ValueTooLarge { field: String, len: usize, limit: usize },
    #[error("user scope requires a non-empty owner")]
    EmptyOwner,
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CoreError {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("record {0} not found")]
    NotFound(RecordId),
    /// A log entry that cannot be applied to the state it follows.
    #[error("log entry {seq} is inconsistent: {reason}")]
    Inconsistent { seq: u64, reason: &'static str },
}
