use alloc::{collections::BTreeMap, string::String};
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ValidationError;
use crate::id::{AppId, RecordId, UserId};

/// Largest accepted field value, in bytes.
pub const MAX_VALUE_BYTES: usize = 1 << 20;
const MAX_NAME_LEN: usize = 64;

fn valid_name(s: &str, allow_dash: bool) -> bool {
    (1..=MAX_NAME_LEN).contains(&s.len())
        && s.bytes().all(|b| {
            b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_' || (allow_dash && b == b'-')
        })
}

/// A field name: `[a-z0-9_]{1,64}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FieldName(String);

impl FieldName {
    pub fn parse(s: impl Into<String>) -> Result<Self, ValidationError> {
        let s = s.into();
        if valid_name(&s, false) {
            Ok(Self(s))
        } else {
            Err(ValidationError::FieldName(s))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for FieldName {
    type Error = ValidationError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::parse(s)
    }
}

impl From<FieldName> for String {
    fn from(n: FieldName) -> String {
        n.0
    }
}

impl fmt::Display for FieldName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A collection name: `[a-z0-9_-]{1,64}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Collection(String);

impl Collection {
    pub fn parse(s: impl Into<String>) -> Result<Self, ValidationError> {
        let s = s.into();
        if valid_name(&s, true) {
            Ok(Self(s))
        } else {
            Err(ValidationError::Collection(s))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Collection {
    type Error = ValidationError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::parse(s)
    }
}

impl From<Collection> for String {
    fn from(n: Collection) -> String {
        n.0
    }
}

impl fmt::Display for Collection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Visibility {
    #[default]
    Private,
    Public,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldEntry {
    pub value: String,
    #[serde(default)]
    pub access: Visibility,
}

impl FieldEntry {
    pub fn new(value: impl Into<String>, access: Visibility) -> Self {
        Self { value: value.into(), access }
    }

    pub fn public(value: impl Into<String>) -> Self {
        Self::new(value, Visibility::Public)
    }

    pub fn private(value: impl Into<String>) -> Self {
        Self::new(value, Visibility::Private)
    }
}

pub type Fields = BTreeMap<FieldName, FieldEntry>;

/// Which store a record lives in: one user's userStore, or the app-wide staticStore.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "ownerID", rename_all = "lowercase")]
pub enum Scope {
    User(UserId),
    Static,
}

impl Scope {
    pub fn owner(&self) -> Option<&UserId> {
        match self {
            Scope::User(owner) => Some(owner),
            Scope::Static => None,
        }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        match self {
            Scope::User(owner) if owner.as_str().is_empty() => Err(ValidationError::EmptyOwner),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Stamp {
    #[serde(rename = "wallMillis")]
    pub wall_millis: i64,
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub record_id: RecordId,
    pub app_id: AppId,
    pub scope: Scope,
    pub collection: Collection,
    pub fields: Fields,
    pub stamp: Stamp,
}

impl Record {
    /// True if the record carries at least one of `names`.
    pub fn has_any(&self, names: &[FieldName]) -> bool {
        names.iter().any(|n| self.fields.contains_key(n))
    }
}

/// Checks the non-empty and value-size rules shared by appends and patches.
pub fn validate_fields(fields: &Fields) -> Result<(), ValidationError> {
    if fields.is_empty() {
        return Err(ValidationError::NoFields);
    }
    for (name, entry) in fields {
        if entry.value.len() > MAX_VALUE_BYTES {
            return Err(ValidationError::ValueTooLarge {
                field: name.as_str().into(),
                len: entry.value.len(),
                limit: MAX_VALUE_BYTES,
            });
        }
    }
    Ok(())
}
