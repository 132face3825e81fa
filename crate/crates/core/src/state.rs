//! The engine as a deterministic state machine over log entries.
//!
//! Writers call one of the `prepare_*` methods, which validate against the
//! current state and produce a [`LogEntry`] carrying the next sequence
//! number. The caller makes the entry durable, then [`EngineState::apply`]s
//! it. Recovery is the same `apply` loop over the decoded log, so the
//! in-memory state after a restart is exactly the replay of what was logged.

use alloc::{collections::BTreeMap, vec::Vec};

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::id::{AppId, RecordId};
use crate::query::QuerySpec;
use crate::record::{validate_fields, Collection, Fields, Record, Scope, Stamp};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Mutation {
    Append(Record),
    Update { app_id: AppId, record_id: RecordId, patch: Fields },
    Delete { app_id: AppId, record_id: RecordId },
}

/// One logged mutation. Every accepted write consumes one sequence number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seq: u64,
    pub mutation: Mutation,
}

type ScopeKey = (AppId, Scope);

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EngineState {
    records: BTreeMap<RecordId, Record>,
    /// (app, scope) -> seq -> record, for recency-ordered scans of one scope.
    by_scope: BTreeMap<ScopeKey, BTreeMap<u64, RecordId>>,
    last_seq: u64,
}

impl EngineState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Highest sequence number applied so far; 0 for an empty engine.
    pub fn last_seq(&self) -> u64 {
        self.last_seq
    }

    pub fn next_seq(&self) -> u64 {
        self.last_seq + 1
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, record_id: &RecordId) -> Option<&Record> {
        self.records.get(record_id)
    }

    /// All live records in record-id order.
    pub fn records(&self) -> impl Iterator<Item = &Record> {
        self.records.values()
    }

    fn owned(&self, app_id: &AppId, record_id: &RecordId) -> Result<&Record, CoreError> {
        self.records
            .get(record_id)
            .filter(|r| &r.app_id == app_id)
            .ok_or_else(|| CoreError::NotFound(record_id.clone()))
    }

    pub fn prepare_append(
        &self,
        app_id: AppId,
        scope: Scope,
        collection: Collection,
        fields: Fields,
        wall_millis: i64,
    ) -> Result<LogEntry, CoreError> {
        scope.validate()?;
        validate_fields(&fields)?;
        let seq = self.next_seq();
        Ok(LogEntry {
            seq,
            mutation: Mutation::Append(Record {
                record_id: RecordId::from_seq(seq),
                app_id,
                scope,
                collection,
                fields,
                stamp: Stamp { wall_millis, seq },
            }),
        })
    }

    pub fn prepare_update(
        &self,
        app_id: AppId,
        record_id: RecordId,
        patch: Fields,
    ) -> Result<LogEntry, CoreError> {
        validate_fields(&patch)?;
        self.owned(&app_id, &record_id)?;
        Ok(LogEntry { seq: self.next_seq(), mutation: Mutation::Update { app_id, record_id, patch } })
    }

    pub fn prepare_delete(&self, app_id: AppId, record_id: RecordId) -> Result<LogEntry, CoreError> {
        self.owned(&app_id, &record_id)?;
        Ok(LogEntry { seq: self.next_seq(), mutation: Mutation::Delete { app_id, record_id } })
    }

    /// Applies a logged mutation. Returns the record as it stands afterwards
    /// (`None` for deletes).
    pub fn apply(&mut self, entry: LogEntry) -> Result<Option<Record>, CoreError> {
        let seq = entry.seq;
        if seq <= self.last_seq {
            return Err(CoreError::Inconsistent { seq, reason: "sequence number did not increase" });
        }
        let out = match entry.mutation {
            Mutation::Append(record) => {
                if record.stamp.seq != seq {
                    return Err(CoreError::Inconsistent { seq, reason: "stamp does not match entry" });
                }
                if self.records.contains_key(&record.record_id) {
                    return Err(CoreError::Inconsistent { seq, reason: "duplicate record id" });
                }
                self.insert(record.clone());
                Some(record)
            }
            Mutation::Update { app_id, record_id, patch } => {
                if self.owned(&app_id, &record_id).is_err() {
                    return Err(CoreError::Inconsistent { seq, reason: "update of missing record" });
                }
                let record = self.records.get_mut(&record_id).expect("checked above");
                record.fields.extend(patch);
                Some(record.clone())
            }
            Mutation::Delete { app_id, record_id } => {
                if self.owned(&app_id, &record_id).is_err() {
                    return Err(CoreError::Inconsistent { seq, reason: "delete of missing record" });
                }
                self.remove(&record_id);
                None
            }
        };
        self.last_seq = seq;
        Ok(out)
    }

    fn insert(&mut self, record: Record) {
        self.by_scope
            .entry((record.app_id.clone(), record.scope.clone()))
            .or_default()
            .insert(record.stamp.seq, record.record_id.clone());
        self.records.insert(record.record_id.clone(), record);
    }

    fn remove(&mut self, record_id: &RecordId) {
        if let Some(record) = self.records.remove(record_id) {
            let key = (record.app_id, record.scope);
            if let Some(index) = self.by_scope.get_mut(&key) {
                index.remove(&record.stamp.seq);
                if index.is_empty() {
                    self.by_scope.remove(&key);
                }
            }
        }
    }

    /// Every record selected by `spec`, newest first, without truncation.
    /// Served from the scope index.
    pub fn matching<'a>(
        &'a self,
        app_id: &AppId,
        scope: &Scope,
        spec: &'a QuerySpec,
    ) -> impl Iterator<Item = &'a Record> + 'a {
        let scope = spec.effective_scope(scope);
        self.by_scope
            .get(&(app_id.clone(), scope))
            .into_iter()
            .flat_map(|index| index.values().rev())
            .map(|id| &self.records[id])
            .filter(move |r| {
                spec.collection.as_ref().is_none_or(|c| &r.collection == c)
                    && r.has_any(&spec.field_names)
            })
    }

    /// Records selected by `spec`, newest first, truncated to `spec.limit()`.
    pub fn query(
        &self,
        app_id: &AppId,
        scope: &Scope,
        spec: &QuerySpec,
    ) -> Result<Vec<Record>, CoreError> {
        spec.validate()?;
        Ok(self.matching(app_id, scope, spec).take(spec.limit()).cloned().collect())
    }

    /// Same contract as [`EngineState::query`] but computed by scanning every
    /// record. Used to cross-check the indexes.
    pub fn query_by_scan(
        &self,
        app_id: &AppId,
        scope: &Scope,
        spec: &QuerySpec,
    ) -> Result<Vec<Record>, CoreError> {
        spec.validate()?;
        let scope = spec.effective_scope(scope);
        let mut hits: Vec<&Record> =
            self.records.values().filter(|r| spec.selects(app_id, &scope, r)).collect();
        hits.sort_by_key(|r| core::cmp::Reverse(r.stamp.seq));
        Ok(hits.into_iter().take(spec.limit()).cloned().collect())
    }

    /// Rebuilds state from a snapshot image (records plus the last applied seq).
    pub fn from_parts(
        last_seq: u64,
        records: impl IntoIterator<Item = Record>,
    ) -> Result<Self, CoreError> {
        let mut state = Self::new();
        for record in records {
            let seq = record.stamp.seq;
            if seq > last_seq || state.records.contains_key(&record.record_id) {
                return Err(CoreError::Inconsistent { seq, reason: "snapshot record out of range" });
            }
            state.insert(record);
        }
        state.last_seq = last_seq;
        Ok(state)
    }
}
