//! Field-level visibility rules applied on top of raw engine queries.
//!
//! A user-scope record's owner sees every requested field; anyone else
//! (another user or an anonymous caller) sees only its public fields.
//! Static-scope records are app-global, so every field is visible to every
//! caller of the app. Records left with no visible requested field are
//! dropped before the count limit is applied, so `count` bounds the number
//! of records the caller can actually see.

use alloc::{collections::BTreeMap, string::String, vec::Vec};

use serde::{Deserialize, Serialize};

use crate::id::{RecordId, UserId};
use crate::query::QuerySpec;
use crate::record::{Collection, FieldName, Record, Scope, Stamp, Visibility};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Principal {
    Anonymous,
    User(UserId),
}

impl Principal {
    pub fn user(&self) -> Option<&UserId> {
        match self {
            Principal::User(u) => Some(u),
            Principal::Anonymous => None,
        }
    }
}

/// A record as a particular principal may see it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisibleRecord {
    #[serde(rename = "recordID")]
    pub record_id: RecordId,
    #[serde(rename = "ownerID", default, skip_serializing_if = "Option::is_none")]
    pub owner_id: Option<UserId>,
    pub collection: Collection,
    pub stamp: Stamp,
    pub fields: BTreeMap<FieldName, String>,
}

fn sees_everything(record: &Record, principal: &Principal) -> bool {
    match &record.scope {
        Scope::Static => true,
        Scope::User(owner) => principal.user() == Some(owner),
    }
}

/// The requested fields of `record` that `principal` may read, or `None` if
/// there are none.
pub fn view(record: &Record, principal: &Principal, requested: &[FieldName]) -> Option<VisibleRecord> {
    let all = sees_everything(record, principal);
    let fields: BTreeMap<FieldName, String> = requested
        .iter()
        .filter_map(|name| {
            let entry = record.fields.get(name)?;
            (all || entry.access == Visibility::Public).then(|| (name.clone(), entry.value.clone()))
        })
        .collect();
    if fields.is_empty() {
        return None;
    }
    Some(VisibleRecord {
        record_id: record.record_id.clone(),
        owner_id: record.scope.owner().cloned(),
        collection: record.collection.clone(),
        stamp: record.stamp,
        fields,
    })
}

/// Applies [`view`] to recency-ordered `records` and keeps the first
/// `spec.limit()` survivors.
pub fn visible_page<'a>(
    records: impl IntoIterator<Item = &'a Record>,
    principal: &Principal,
    spec: &QuerySpec,
) -> Vec<VisibleRecord> {
    records
        .into_iter()
        .filter_map(|r| view(r, principal, &spec.field_names))
        .take(spec.limit())
        .collect()
}
