//! Per-app user accounts: creation, authentication and free-form attributes.
//!
//! Accounts of app `A` are static records in the reserved namespace
//! `_users.A`, one record per account. The digest is stored there and
//! never leaves this module.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use flare_core::{
    AppId, Collection, FieldEntry, FieldName, Fields, Principal, QuerySpec, RecordId, Scope, UserId,
};
use serde::{Deserialize, Serialize};

use crate::engine::Backend;
use crate::error::{FlareError, Result};
use crate::password::PasswordHasher;

pub type Attributes = BTreeMap<String, String>;

/// Usernames that collide with fixed path segments under `/users/`.
const RESERVED_USERNAMES: [&str; 2] = ["me", "authenticate"];

/// What other users of the app may see about an account.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicUser {
    #[serde(rename = "userID")]
    pub user_id: UserId,
    pub username: String,
    pub attributes: Attributes,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuthResult {
    Failure,
    Success(UserId),
}

impl AuthResult {
    pub fn user_id(&self) -> Option<&UserId> {
        match self {
            AuthResult::Success(id) => Some(id),
            AuthResult::Failure => None,
        }
    }
}

#[derive(Debug, Clone)]
struct Account {
    record_id: RecordId,
    user_id: UserId,
    username: String,
    digest: String,
    attributes: Attributes,
}

#[derive(Default)]
struct AppUsers {
    by_name: HashMap<String, UserId>,
    by_id: HashMap<UserId, Account>,
}

pub struct UserDirectory {
    backend: Arc<dyn Backend>,
    hasher: PasswordHasher,
    apps: RwLock<HashMap<AppId, Arc<RwLock<AppUsers>>>>,
}

fn field(name: &str) -> FieldName {
    FieldName::parse(name).expect("static field name")
}

fn namespace(app: &AppId) -> AppId {
    AppId::new(format!("_users.{app}"))
}

fn accounts() -> Collection {
    Collection::parse("accounts").expect("static collection")
}

fn validate_username(username: &str) -> Result<()> {
    let chars = username.chars().count();
    if !(1..=64).contains(&chars) || username.chars().any(char::is_control) {
        return Err(FlareError::validation("username must be 1-64 printable characters"));
    }
    if RESERVED_USERNAMES.contains(&username) {
        return Err(FlareError::validation(format!("username {username:?} is reserved")));
    }
    Ok(())
}

fn validate_password(password: &str) -> Result<()> {
    if password.is_empty() || password.chars().any(char::is_control) {
        return Err(FlareError::validation("password must be non-empty without control characters"));
    }
    Ok(())
}

fn encode_attributes(attributes: &Attributes) -> String {
    serde_json::to_string(attributes).expect("string maps serialize")
}

impl UserDirectory {
    pub fn new(backend: Arc<dyn Backend>, hasher: PasswordHasher) -> Self {
        Self { backend, hasher, apps: RwLock::new(HashMap::new()) }
    }

    /// The account table of `app`, loaded from the backend on first use.
    fn users(&self, app: &AppId) -> Result<Arc<RwLock<AppUsers>>> {
        if let Some(users) = self.apps.read().unwrap().get(app) {
            return Ok(users.clone());
        }
        let mut apps = self.apps.write().unwrap();
        if let Some(users) = apps.get(app) {
            return Ok(users.clone());
        }
        let mut users = AppUsers::default();
        let spec = QuerySpec::new([field("user_id")]);
        let mut bad = None;
        self.backend.scan(&namespace(app), &Scope::Static, &spec, &mut |r| {
            let get = |n: &str| r.fields.get(&field(n)).map(|e| e.value.clone()).unwrap_or_default();
            let attributes = match serde_json::from_str(&get("attributes")) {
                Ok(a) => a,
                Err(e) => {
                    bad = Some(e);
                    return false;
                }
            };
            let account = Account {
                record_id: r.record_id.clone(),
                user_id: UserId::new(get("user_id")),
                username: get("username"),
                digest: get("digest"),
                attributes,
            };
            users.by_name.insert(account.username.clone(), account.user_id.clone());
            users.by_id.insert(account.user_id.clone(), account);
            true
        })?;
        if let Some(e) = bad {
            return Err(FlareError::CorruptLog(format!("account attributes: {e}")));
        }
        let users = Arc::new(RwLock::new(users));
        apps.insert(app.clone(), users.clone());
        Ok(users)
    }

    pub fn create_user(
        &self,
        app: &AppId,
        username: &str,
        password: &str,
        attributes: Attributes,
    ) -> Result<UserId> {
        validate_username(username)?;
        validate_password(password)?;
        let users = self.users(app)?;
        let mut users = users.write().unwrap();
        if users.by_name.contains_key(username) {
            return Err(FlareError::DuplicateUsername(username.into()));
        }
        let user_id = UserId::new(uuid::Uuid::new_v4().simple().to_string());
        let digest = self.hasher.digest(password);
        let mut fields = Fields::new();
        fields.insert(field("user_id"), FieldEntry::private(user_id.as_str()));
        fields.insert(field("username"), FieldEntry::private(username));
        fields.insert(field("digest"), FieldEntry::private(digest.as_str()));
        fields.insert(field("attributes"), FieldEntry::private(encode_attributes(&attributes)));
        let record = self.backend.append(&namespace(app), Scope::Static, accounts(), fields)?;
        users.by_name.insert(username.into(), user_id.clone());
        users.by_id.insert(
            user_id.clone(),
            Account { record_id: record.record_id, user_id: user_id.clone(), username: username.into(), digest, attributes },
        );
        Ok(user_id)
    }

    /// Failure is the same value whether the username or the password was wrong.
    pub fn authenticate(&self, app: &AppId, username: &str, password: &str) -> Result<AuthResult> {
        let users = self.users(app)?;
        let found = {
            let users = users.read().unwrap();
            users.by_name.get(username).and_then(|id| users.by_id.get(id)).cloned()
        };
        Ok(match found {
            Some(account) if self.hasher.verify(password, &account.digest) => {
                AuthResult::Success(account.user_id)
            }
            Some(_) => AuthResult::Failure,
            None => {
                self.hasher.verify_decoy(password);
                AuthResult::Failure
            }
        })
    }

    /// Checks per-request credentials (user id plus password).
    pub fn verify(&self, app: &AppId, user_id: &UserId, password: &str) -> Result<()> {
        let users = self.users(app)?;
        let digest = users.read().unwrap().by_id.get(user_id).map(|a| a.digest.clone());
        match digest {
            Some(d) if self.hasher.verify(password, &d) => Ok(()),
            Some(_) => Err(FlareError::Unauthenticated),
            None => {
                self.hasher.verify_decoy(password);
                Err(FlareError::Unauthenticated)
            }
        }
    }

    /// Username to user id, for public lookups.
    pub fn lookup(&self, app: &AppId, username: &str) -> Result<Option<UserId>> {
        Ok(self.users(app)?.read().unwrap().by_name.get(username).cloned())
    }

    fn caller<'a>(&self, principal: &'a Principal) -> Result<&'a UserId> {
        principal.user().ok_or(FlareError::Unauthenticated)
    }

    pub fn get_user(&self, app: &AppId, caller: &Principal, username: &str) -> Result<PublicUser> {
        let caller = self.caller(caller)?;
        let users = self.users(app)?;
        let users = users.read().unwrap();
        if !users.by_id.contains_key(caller) {
            return Err(FlareError::Unauthenticated);
        }
        let account = users
            .by_name
            .get(username)
            .and_then(|id| users.by_id.get(id))
            .ok_or_else(|| FlareError::NotFound(format!("user {username}")))?;
        Ok(PublicUser {
            user_id: account.user_id.clone(),
            username: account.username.clone(),
            attributes: account.attributes.clone(),
        })
    }

    /// Replaces the caller's password and/or merges `patch` into their
    /// attributes. An empty value in the patch removes that key.
    pub fn update_user(
        &self,
        app: &AppId,
        caller: &Principal,
        password: Option<&str>,
        patch: Option<&Attributes>,
    ) -> Result<()> {
        let caller = self.caller(caller)?;
        if let Some(pw) = password {
            validate_password(pw)?;
        }
        let users = self.users(app)?;
        let mut users = users.write().unwrap();
        let account = users.by_id.get(caller).ok_or(FlareError::Unauthenticated)?;
        let mut updated = account.clone();
        let mut fields = Fields::new();
        if let Some(pw) = password {
            updated.digest = self.hasher.digest(pw);
            fields.insert(field("digest"), FieldEntry::private(updated.digest.as_str()));
        }
        if let Some(patch) = patch {
            for (k, v) in patch {
                if v.is_empty() {
                    updated.attributes.remove(k);
                } else {
                    updated.attributes.insert(k.clone(), v.clone());
                }
            }
            fields.insert(field("attributes"), FieldEntry::private(encode_attributes(&updated.attributes)));
        }
        if fields.is_empty() {
            return Ok(());
        }
        self.backend.update(&namespace(app), &updated.record_id, fields)?;
        users.by_id.insert(caller.clone(), updated);
        Ok(())
    }

    /// Removes the caller's account. Their userStore records stay in place.
    pub fn delete_user(&self, app: &AppId, caller: &Principal) -> Result<()> {
        let caller = self.caller(caller)?;
        let users = self.users(app)?;
        let mut users = users.write().unwrap();
        let account = users.by_id.get(caller).ok_or(FlareError::Unauthenticated)?.clone();
        self.backend.delete(&namespace(app), &account.record_id)?;
        users.by_id.remove(caller);
        users.by_name.remove(&account.username);
        Ok(())
    }

    /// Every stored digest of `app`. Lets tests scan responses for leaks.
    #[doc(hidden)]
    pub fn digests(&self, app: &AppId) -> Result<Vec<String>> {
        Ok(self.users(app)?.read().unwrap().by_id.values().map(|a| a.digest.clone()).collect())
    }
}
