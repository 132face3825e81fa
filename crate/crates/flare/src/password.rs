//! Salted Argon2id password digests in PHC string form.

use argon2::password_hash::{PasswordHash, PasswordHasher as _, PasswordVerifier, SaltString};
use argon2::{Algorithm, Argon2, Params, Version};
use rand::RngCore;
use serde::Deserialize;

/// Argon2 cost parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub struct HashCost {
    pub memory_kib: u32,
    pub iterations: u32,
}

impl Default for HashCost {
    fn default() -> Self {
        Self { memory_kib: 19 * 1024, iterations: 2 }
    }
}

impl HashCost {
    /// The smallest cost Argon2 accepts. Only for tests.
    pub const MINIMAL: HashCost = HashCost { memory_kib: 8, iterations: 1 };
}

#[derive(Clone)]
pub struct PasswordHasher {
    argon: Argon2<'static>,
    /// Verified against when a username is unknown, so that path costs the same.
    decoy: String,
}

impl PasswordHasher {
    pub fn new(cost: HashCost) -> Self {
        let params = Params::new(cost.memory_kib, cost.iterations, 1, None)
            .expect("argon2 cost parameters out of range");
        let argon = Argon2::new(Algorithm::Argon2id, Version::V0x13, params);
        let mut hasher = Self { argon, decoy: String::new() };
        hasher.decoy = hasher.digest("decoy password");
        hasher
    }

    pub fn digest(&self, password: &str) -> String {
        let mut salt = [0u8; 16];
        rand::rng().fill_bytes(&mut salt);
        let salt = SaltString::encode_b64(&salt).expect("16-byte salt encodes");
        self.argon
            .hash_password(password.as_bytes(), &salt)
            .expect("argon2 hashing with valid params cannot fail")
            .to_string()
    }

    pub fn verify(&self, password: &str, digest: &str) -> bool {
        PasswordHash::new(digest)
            .map(|parsed| self.argon.verify_password(password.as_bytes(), &parsed).is_ok())
            .unwrap_or(false)
    }

    /// Burns one verification worth of time and always fails.
    pub fn verify_decoy(&self, password: &str) {
        let _ = self.verify(password, &self.decoy);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digests_are_salted_and_verify() {
        let h = PasswordHasher::new(HashCost::MINIMAL);
        let a = h.digest("pw1");
        let b = h.digest("pw1");
        assert_ne!(a, b);
        assert!(a.starts_with("$argon2id$"));
        assert!(!a.contains("pw1"));
        assert!(h.verify("pw1", &a));
        assert!(h.verify("pw1", &b));
        assert!(!h.verify("pw2", &a));
        assert!(!h.verify("pw1", "not a digest"));
    }
}
