//! File-backed storage engine and the backend contract the services use.
//!
//! On disk an engine is two files: an append-only log of framed mutations
//! (see [`flare_core::log`]) and an optional snapshot image. Opening an
//! engine loads the snapshot, replays every log entry whose sequence number
//! is above it, and truncates any torn tail so new appends start on a frame
//! boundary.

use std::fs::{self, File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use flare_core::{
    log, snapshot, AppId, Collection, EngineState, Fields, LogEntry, QuerySpec, Record, RecordId,
    Scope,
};
use serde::Deserialize;

use crate::error::{FlareError, Result};

/// The wrapper contract between the service layer and a storage backend.
///
/// Implementations must give every accepted write a strictly increasing
/// sequence number, make it durable before returning, and serve queries in
/// descending sequence order.
pub trait Backend: Send + Sync {
    fn append(&self, app: &AppId, scope: Scope, collection: Collection, fields: Fields) -> Result<Record>;

    fn update(&self, app: &AppId, record_id: &RecordId, patch: Fields) -> Result<Record>;

    fn delete(&self, app: &AppId, record_id: &RecordId) -> Result<()>;

    fn get(&self, app: &AppId, record_id: &RecordId) -> Option<Record>;

    /// Records selected by `spec`, newest first, truncated to `spec.limit()`.
    fn query(&self, app: &AppId, scope: &Scope, spec: &QuerySpec) -> Result<Vec<Record>>;

    /// Visits every record selected by `spec` newest first, ignoring
    /// `spec.count`, until `visit` returns `false`.
    fn scan(
        &self,
        app: &AppId,
        scope: &Scope,
        spec: &QuerySpec,
        visit: &mut dyn FnMut(&Record) -> bool,
    ) -> Result<()>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Durability {
    /// fsync after every entry: survives power loss.
    #[default]
    Fsync,
    /// write(2) only: survives a process kill, not a machine crash.
    Flush,
}

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub log_path: PathBuf,
    pub snapshot_path: PathBuf,
    pub durability: Durability,
    /// Take a snapshot automatically after this many logged entries.
    pub snapshot_every: Option<u64>,
}

impl EngineConfig {
    /// Log at `log_path`, snapshot next to it with a `.snap` suffix.
    pub fn new(log_path: impl Into<PathBuf>) -> Self {
        let log_path = log_path.into();
        let mut snap = log_path.clone().into_os_string();
        snap.push(".snap");
        Self { log_path, snapshot_path: snap.into(), durability: Durability::Fsync, snapshot_every: None }
    }

    pub fn durability(mut self, durability: Durability) -> Self {
        self.durability = durability;
        self
    }

    pub fn snapshot_path(mut self, path: impl Into<PathBuf>) -> Self {
        self.snapshot_path = path.into();
        self
    }
}

/// What [`Engine::open`] found on disk.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Recovery {
    pub snapshot_seq: Option<u64>,
    pub replayed: usize,
    pub torn_bytes: u64,
}

struct Writer {
    file: File,
    len: u64,
    since_snapshot: u64,
}

pub struct Engine {
    config: EngineConfig,
    state: RwLock<EngineState>,
    writer: Mutex<Writer>,
    recovery: Recovery,
}

fn now_millis() -> i64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as i64)
}

fn sync_dir(path: &Path) -> std::io::Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => File::open(dir)?.sync_all(),
        _ => File::open(".")?.sync_all(),
    }
}

impl Engine {
    /// Opens (creating if needed) the engine at `config`'s paths and recovers its state.
    pub fn open(config: EngineConfig) -> Result<Self> {
        let mut state = match fs::read(&config.snapshot_path) {
            Ok(bytes) => Some(snapshot::decode(&bytes)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(e) => return Err(e.into()),
        };
        let snapshot_seq = state.as_ref().map(EngineState::last_seq);
        let state_ref = state.get_or_insert_with(EngineState::new);

        let mut file = OpenOptions::new().read(true).append(true).create(true).open(&config.log_path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;
        let decoded = log::decode_log(&bytes).map_err(|e| FlareError::CorruptLog(e.to_string()))?;

        let mut replayed = 0;
        for entry in decoded.entries {
            // Entries already folded into the snapshot survive a crash between
            // writing the snapshot and truncating the log.
            if entry.seq <= state_ref.last_seq() {
                continue;
            }
            state_ref.apply(entry)?;
            replayed += 1;
        }

        let torn_bytes = (bytes.len() - decoded.valid_len) as u64;
        if torn_bytes > 0 {
            tracing::warn!(torn_bytes, path = %config.log_path.display(), "discarding torn log tail");
            file.set_len(decoded.valid_len as u64)?;
            file.sync_all()?;
        }

        let state = state.unwrap_or_default();
        Ok(Self {
            writer: Mutex::new(Writer {
                file,
                len: decoded.valid_len as u64,
                since_snapshot: replayed as u64,
            }),
            state: RwLock::new(state),
            recovery: Recovery { snapshot_seq, replayed, torn_bytes },
            config,
        })
    }

    /// Opens the engine for `log_path` with a default snapshot path.
    pub fn recover(log_path: impl Into<PathBuf>) -> Result<Self> {
        Self::open(EngineConfig::new(log_path))
    }

    pub fn recovery(&self) -> &Recovery {
        &self.recovery
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// Runs `f` against a consistent view of the whole state.
    pub fn with_state<R>(&self, f: impl FnOnce(&EngineState) -> R) -> R {
        f(&self.state.read().unwrap())
    }

    /// Serializes writers: prepare against current state, log, then apply.
    fn write(&self, prepare: impl FnOnce(&EngineState) -> Result<LogEntry>) -> Result<Option<Record>> {
        let mut writer = self.writer.lock().unwrap();
        let entry = prepare(&self.state.read().unwrap())?;
        let bytes = log::encode_entry(&entry);
        if let Err(e) = self.persist(&mut writer, &bytes) {
            // Drop whatever part of the frame made it out so the log stays well-formed.
            let _ = writer.file.set_len(writer.len);
            return Err(e.into());
        }
        writer.len += bytes.len() as u64;
        writer.since_snapshot += 1;
        let out = self.state.write().unwrap().apply(entry)?;
        if self.config.snapshot_every.is_some_and(|n| writer.since_snapshot >= n) {
            if let Err(e) = self.snapshot_locked(&mut writer) {
                tracing::error!(error = %e, "periodic snapshot failed");
            }
        }
        Ok(out)
    }

    fn persist(&self, writer: &mut Writer, bytes: &[u8]) -> std::io::Result<()> {
        writer.file.write_all(bytes)?;
        if self.config.durability == Durability::Fsync {
            writer.file.sync_data()?;
        }
        Ok(())
    }

    /// Writes a snapshot of the full state and truncates the log.
    pub fn snapshot(&self) -> Result<()> {
        let mut writer = self.writer.lock().unwrap();
        self.snapshot_locked(&mut writer)
    }

    fn snapshot_locked(&self, writer: &mut Writer) -> Result<()> {
        let image = snapshot::encode(&self.state.read().unwrap());
        let mut tmp = self.config.snapshot_path.clone().into_os_string();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        {
            let mut f = File::create(&tmp)?;
            f.write_all(&image)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &self.config.snapshot_path)?;
        sync_dir(&self.config.snapshot_path)?;
        writer.file.set_len(0)?;
        writer.file.sync_all()?;
        writer.len = 0;
        writer.since_snapshot = 0;
        Ok(())
    }
}

impl Backend for Engine {
    fn append(&self, app: &AppId, scope: Scope, collection: Collection, fields: Fields) -> Result<Record> {
        let wall = now_millis();
        self.write(|s| Ok(s.prepare_append(app.clone(), scope, collection, fields, wall)?))
            .map(|r| r.expect("append yields a record"))
    }

    fn update(&self, app: &AppId, record_id: &RecordId, patch: Fields) -> Result<Record> {
        self.write(|s| Ok(s.prepare_update(app.clone(), record_id.clone(), patch)?))
            .map(|r| r.expect("update yields a record"))
    }

    fn delete(&self, app: &AppId, record_id: &RecordId) -> Result<()> {
        self.write(|s| Ok(s.prepare_delete(app.clone(), record_id.clone())?)).map(|_| ())
    }

    fn get(&self, app: &AppId, record_id: &RecordId) -> Option<Record> {
        self.state.read().unwrap().get(record_id).filter(|r| &r.app_id == app).cloned()
    }

    fn query(&self, app: &AppId, scope: &Scope, spec: &QuerySpec) -> Result<Vec<Record>> {
        Ok(self.state.read().unwrap().query(app, scope, spec)?)
    }

    fn scan(
        &self,
        app: &AppId,
        scope: &Scope,
        spec: &QuerySpec,
        visit: &mut dyn FnMut(&Record) -> bool,
    ) -> Result<()> {
        spec.validate()?;
        let state = self.state.read().unwrap();
        for record in state.matching(app, scope, spec) {
            if !visit(record) {
                break;
            }
        }
        Ok(())
    }
}
