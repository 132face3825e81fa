//! Developer keys and application registration.
//!
//! Registrations are stored as static records of a reserved namespace that
//! no registered app id can collide with (app ids are lowercase hex).

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex, RwLock};

use flare_core::{app_id_for, AppId, Collection, FieldEntry, FieldName, Fields, QuerySpec, Scope};

use crate::engine::Backend;
use crate::error::{FlareError, Result};

const NAMESPACE: &str = "_registry";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppRegistration {
    pub app_id: AppId,
    pub dev_key: String,
    pub app_name: String,
    pub created_at: i64,
}

pub struct AppRegistry {
    backend: Arc<dyn Backend>,
    keys: BTreeSet<String>,
    apps: RwLock<HashMap<AppId, AppRegistration>>,
    register_lock: Mutex<()>,
}

fn field(name: &str) -> FieldName {
    FieldName::parse(name).expect("static field name")
}

fn namespace() -> AppId {
    AppId::from(NAMESPACE)
}

impl AppRegistry {
    pub fn load(backend: Arc<dyn Backend>, keys: impl IntoIterator<Item = String>) -> Result<Self> {
        let mut apps = HashMap::new();
        let spec = QuerySpec::new([field("app_id")]);
        backend.scan(&namespace(), &Scope::Static, &spec, &mut |r| {
            let get = |n: &str| r.fields.get(&field(n)).map(|e| e.value.clone()).unwrap_or_default();
            let reg = AppRegistration {
                app_id: AppId::from(get("app_id")),
                dev_key: get("dev_key"),
                app_name: get("app_name"),
                created_at: r.stamp.wall_millis,
            };
            apps.insert(reg.app_id.clone(), reg);
            true
        })?;
        Ok(Self {
            backend,
            keys: keys.into_iter().collect(),
            apps: RwLock::new(apps),
            register_lock: Mutex::new(()),
        })
    }

    /// Exact, case-sensitive match against the provisioned keys.
    pub fn validate_key(&self, key: &str) -> bool {
        self.keys.contains(key)
    }

    /// Returns the app id for `(key, app_name)`, registering it on first use.
    pub fn register_app(&self, key: &str, app_name: &str) -> Result<AppId> {
        if !self.validate_key(key) {
            return Err(FlareError::InvalidKey);
        }
        let chars = app_name.chars().count();
        if !(1..=64).contains(&chars) || app_name.chars().any(char::is_control) {
            return Err(FlareError::validation("appName must be 1-64 printable characters"));
        }
        let app_id = app_id_for(key, app_name);
        if self.apps.read().unwrap().contains_key(&app_id) {
            return Ok(app_id);
        }
        let _guard = self.register_lock.lock().unwrap();
        if self.apps.read().unwrap().contains_key(&app_id) {
            return Ok(app_id);
        }
        let mut fields = Fields::new();
        fields.insert(field("app_id"), FieldEntry::private(app_id.as_str()));
        fields.insert(field("dev_key"), FieldEntry::private(key));
        fields.insert(field("app_name"), FieldEntry::private(app_name));
        let record = self.backend.append(
            &namespace(),
            Scope::Static,
            Collection::parse("apps").expect("static collection"),
            fields,
        )?;
        self.apps.write().unwrap().insert(
            app_id.clone(),
            AppRegistration {
                app_id: app_id.clone(),
                dev_key: key.into(),
                app_name: app_name.into(),
                created_at: record.stamp.wall_millis,
            },
        );
        Ok(app_id)
    }

    pub fn get(&self, app_id: &AppId) -> Option<AppRegistration> {
        self.apps.read().unwrap().get(app_id).cloned()
    }

    pub fn require(&self, app_id: &AppId) -> Result<()> {
        if self.apps.read().unwrap().contains_key(app_id) {
            Ok(())
        } else {
            Err(FlareError::UnknownApp(app_id.to_string()))
        }
    }

    pub fn len(&self) -> usize {
        self.apps.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Engine;

    const KEY: &str = "F92KLF5434TR4H";

    fn registry(dir: &tempfile::TempDir) -> AppRegistry {
        let engine = Arc::new(Engine::recover(dir.path().join("flare.log")).unwrap());
        AppRegistry::load(engine, [KEY.to_string()]).unwrap()
    }

    #[test]
    fn key_validation_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let r = registry(&dir);
        assert!(r.validate_key(KEY));
        assert!(!r.validate_key(""));
        assert!(!r.validate_key("F92KLF5434TR4h"));
        assert!(!r.validate_key("F92KLF5434TR4"));
    }

    #[test]
    fn registration_is_idempotent_and_persistent() {
        let dir = tempfile::tempdir().unwrap();
        let id = {
            let r = registry(&dir);
            let a = r.register_app(KEY, "flitterApp").unwrap();
            assert_eq!(r.register_app(KEY, "flitterApp").unwrap(), a);
            assert_eq!(r.len(), 1);
            assert_ne!(r.register_app(KEY, "other").unwrap(), a);
            a
        };
        let r = registry(&dir);
        assert_eq!(r.len(), 2);
        assert_eq!(r.get(&id).unwrap().app_name, "flitterApp");
        assert_eq!(r.register_app(KEY, "flitterApp").unwrap(), id);
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn bad_key_and_bad_name() {
        let dir = tempfile::tempdir().unwrap();
        let r = registry(&dir);
        assert!(matches!(r.register_app("not-a-key", "x"), Err(FlareError::InvalidKey)));
        assert!(matches!(r.register_app(KEY, ""), Err(FlareError::Validation(_))));
        assert!(matches!(r.register_app(KEY, &"a".repeat(65)), Err(FlareError::Validation(_))));
        assert!(matches!(r.require(&AppId::from("nope")), Err(FlareError::UnknownApp(_))));
        assert!(matches!(r.require(&AppId::from(NAMESPACE)), Err(FlareError::UnknownApp(_))));
    }
}
