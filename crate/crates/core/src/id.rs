use alloc::{format, string::String};
use core::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

macro_rules! token {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(token: impl Into<String>) -> Self {
                Self(token.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }

            pub fn into_inner(self) -> String {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.into())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

token!(
    /// Namespace root for every user and record of one registered application.
    AppId
);
token!(
    /// Opaque per-app user identity.
    UserId
);
token!(
    /// Engine-wide unique record identity.
    RecordId
);

impl RecordId {
    /// Record ids are derived from the write sequence number that created them,
    /// which makes them unique engine-wide and stable across log replay.
    pub fn from_seq(seq: u64) -> Self {
        Self(format!("r{seq:015x}"))
    }
}

/// Deterministic application id: hex of the first 16 bytes of
/// `SHA-256(devKey || 0x00 || appName)`.
pub fn app_id_for(dev_key: &str, app_name: &str) -> AppId {
    let mut hasher = Sha256::new();
    hasher.update(dev_key.as_bytes());
    hasher.update([0u8]);
    hasher.update(app_name.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(32);
    for b in &digest[..16] {
        out.push_str(&format!("{b:02x}"));
    }
    AppId(out)
}
