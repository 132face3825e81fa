use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::ValidationError;
use crate::id::{AppId, UserId};
use crate::record::{Collection, FieldName, Record, Scope};

/// Hard cap on records returned by one query, and the default when no count is given.
pub const MAX_RESULTS: usize = 100;

/// A recency-ordered selection over one app's records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub field_names: Vec<FieldName>,
    pub count: Option<u32>,
    pub owner_filter: Option<UserId>,
    pub collection: Option<Collection>,
}

impl QuerySpec {
    pub fn new(field_names: impl IntoIterator<Item = FieldName>) -> Self {
        Self {
            field_names: field_names.into_iter().collect(),
            count: None,
            owner_filter: None,
            collection: None,
        }
    }

    pub fn count(mut self, count: u32) -> Self {
        self.count = Some(count);
        self
    }

    pub fn owner(mut self, owner: UserId) -> Self {
        self.owner_filter = Some(owner);
        self
    }

    pub fn collection(mut self, collection: Collection) -> Self {
        self.collection = Some(collection);
        self
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.field_names.is_empty() {
            return Err(ValidationError::NoQueryFields);
        }
        if let Some(owner) = &self.owner_filter {
            if owner.as_str().is_empty() {
                return Err(ValidationError::EmptyOwner);
            }
        }
        Ok(())
    }

    /// `min(count, 100)`, with an absent count meaning 100.
    pub fn limit(&self) -> usize {
        self.count.map_or(MAX_RESULTS, |c| (c as usize).min(MAX_RESULTS))
    }

    /// The scope actually searched: the owner filter replaces a user scope's
    /// owner; static scope ignores it.
    pub fn effective_scope(&self, scope: &Scope) -> Scope {
        match (scope, &self.owner_filter) {
            (Scope::User(_), Some(owner)) => Scope::User(owner.clone()),
            (scope, _) => scope.clone(),
        }
    }

    /// The literal selection predicate, minus ordering and truncation.
    pub fn selects(&self, app_id: &AppId, scope: &Scope, record: &Record) -> bool {
        &record.app_id == app_id
            && &record.scope == scope
            && self.collection.as_ref().is_none_or(|c| &record.collection == c)
            && record.has_any(&self.field_names)
    }
}
