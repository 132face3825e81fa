//! Flare: a backend-as-a-service over a log-structured record store.
//!
//! Layers, bottom up:
//!
//! - [`engine`]: the durable storage backend (log + snapshot files).
//! - [`registry`], [`users`], [`store`], [`gateway`]: the app registry and
//!   the Users, Storage and Web APIs.
//! - [`server`]: the REST binding of those APIs.
//! - [`client`]: the access library applications use instead of raw HTTP.
//! - [`flutter`]: a command-line micro-blogging client built on [`client`].

pub mod client;
pub mod config;
pub mod engine;
pub mod error;
pub mod flutter;
pub mod gateway;
pub mod password;
pub mod registry;
pub mod server;
pub mod store;
pub mod users;
pub mod wire;

use std::sync::Arc;

pub use config::ServerConfig;
pub use engine::{Backend, Engine, EngineConfig};
pub use error::{ErrorCode, FlareError};
pub use flare_core as core;

use crate::gateway::WebGateway;
use crate::password::{HashCost, PasswordHasher};
use crate::registry::AppRegistry;
use crate::store::StoreService;
use crate::users::UserDirectory;

/// Every service of one server instance, sharing one engine.
pub struct Flare {
    pub engine: Arc<Engine>,
    pub registry: AppRegistry,
    pub users: UserDirectory,
    pub store: Arc<StoreService>,
    pub gateway: WebGateway,
}

impl Flare {
    pub fn open(config: &ServerConfig) -> error::Result<Self> {
        let engine = Arc::new(Engine::open(config.engine())?);
        Self::with_engine(engine, config.dev_keys.iter().cloned(), config.password_hash)
    }

    pub fn with_engine(
        engine: Arc<Engine>,
        dev_keys: impl IntoIterator<Item = String>,
        cost: HashCost,
    ) -> error::Result<Self> {
        let backend: Arc<dyn Backend> = engine.clone();
        let store = Arc::new(StoreService::new(backend.clone()));
        Ok(Self {
            registry: AppRegistry::load(backend.clone(), dev_keys)?,
            users: UserDirectory::new(backend, PasswordHasher::new(cost)),
            gateway: WebGateway::new(store.clone()),
            store,
            engine,
        })
    }
}
