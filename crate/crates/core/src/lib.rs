//! Allocation-only core of the Flare backend.
//!
//! Everything here is pure: record and query types, name validation, the
//! in-memory engine state machine with its indexes, visibility filtering,
//! and the byte-level log and snapshot formats. File IO, networking and
//! clocks live in the `flare` crate.

#![no_std]

extern crate alloc;

pub mod error;
pub mod id;
pub mod log;
pub mod query;
pub mod record;
pub mod snapshot;
pub mod state;
pub mod visibility;
pub mod web;

pub use error::{CoreError, ValidationError};
pub use id::{app_id_for, AppId, RecordId, UserId};
pub use query::{QuerySpec, MAX_RESULTS};
pub use record::{Collection, FieldEntry, FieldName, Fields, Record, Scope, Stamp, Visibility};
pub use state::{EngineState, LogEntry, Mutation};
pub use visibility::{Principal, VisibleRecord};
