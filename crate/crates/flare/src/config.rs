//! Server configuration file (TOML).
//!
//! ```toml
//! listen = "127.0.0.1:8080"
//! log_path = "data/flare.log"
//! snapshot_path = "data/flare.snap"   # optional, defaults to <log_path>.snap
//! durability = "fsync"                # or "flush"
//! snapshot_every = 10000              # optional
//! dev_keys = ["F92KLF5434TR4H"]
//!
//! [password_hash]
//! memory_kib = 19456
//! iterations = 2
//!
//! [tls]                               # optional
//! cert_path = "cert.pem"
//! key_path = "key.pem"
//! ```

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::engine::{Durability, EngineConfig};
use crate::password::HashCost;

/// The developer key provisioned when a config lists none.
pub const DEFAULT_DEV_KEY: &str = "F92KLF5434TR4H";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerConfig {
    #[serde(default = "default_listen")]
    pub listen: SocketAddr,
    #[serde(default = "default_log_path")]
    pub log_path: PathBuf,
    #[serde(default)]
    pub snapshot_path: Option<PathBuf>,
    #[serde(default)]
    pub durability: Durability,
    #[serde(default)]
    pub snapshot_every: Option<u64>,
    #[serde(default = "default_keys")]
    pub dev_keys: Vec<String>,
    #[serde(default)]
    pub password_hash: HashCost,
    #[serde(default)]
    pub tls: Option<TlsConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TlsConfig {
    pub cert_path: PathBuf,
    pub key_path: PathBuf,
}

fn default_listen() -> SocketAddr {
    "127.0.0.1:8080".parse().unwrap()
}

fn default_log_path() -> PathBuf {
    "flare.log".into()
}

fn default_keys() -> Vec<String> {
    vec![DEFAULT_DEV_KEY.into()]
}

impl Default for ServerConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
}

impl ServerConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.into(), source })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })
    }

    /// Default config storing everything under `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        Self { log_path: dir.join("flare.log"), ..Self::default() }
    }

    pub fn engine(&self) -> EngineConfig {
        let mut config = EngineConfig::new(&self.log_path).durability(self.durability);
        if let Some(snap) = &self.snapshot_path {
            config = config.snapshot_path(snap);
        }
        config.snapshot_every = self.snapshot_every;
        config
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = ServerConfig::default();
        assert_eq!(c.dev_keys, [DEFAULT_DEV_KEY]);
        assert_eq!(c.durability, Durability::Fsync);
        assert_eq!(c.engine().snapshot_path, PathBuf::from("flare.log.snap"));
        assert!(c.tls.is_none());
    }

    #[test]
    fn full_file() {
        let c: ServerConfig = toml::from_str(
            r#"
            listen = "0.0.0.0:9000"
            log_path = "/var/lib/flare/flare.log"
            snapshot_path = "/var/lib/flare/flare.snap"
            durability = "flush"
            snapshot_every = 500
            dev_keys = ["A", "B"]
            [password_hash]
            memory_kib = 64
            iterations = 3
            [tls]
            cert_path = "c.pem"
            key_path = "k.pem"
            "#,
        )
        .unwrap();
        assert_eq!(c.listen.port(), 9000);
        assert_eq!(c.dev_keys, ["A", "B"]);
        assert_eq!(c.password_hash, HashCost { memory_kib: 64, iterations: 3 });
        let e = c.engine();
        assert_eq!(e.snapshot_path, PathBuf::from("/var/lib/flare/flare.snap"));
        assert_eq!(e.durability, Durability::Flush);
        assert_eq!(e.snapshot_every, Some(500));
        assert!(c.tls.is_some());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<ServerConfig>("lisen = \"x\"").is_err());
    }
}
