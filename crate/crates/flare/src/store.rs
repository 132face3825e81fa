//! Storage API: userStore and staticStore over the backend, with visibility
//! enforced on every read.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use flare_core::{
    visibility::view, AppId, Collection, Fields, Principal, QuerySpec, Record, RecordId, Scope,
    VisibleRecord,
};

use crate::engine::Backend;
use crate::error::{FlareError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StoreKind {
    UserStore,
    StaticStore,
}

impl StoreKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StoreKind::UserStore => "userStore",
            StoreKind::StaticStore => "staticStore",
        }
    }

    fn holds(self, scope: &Scope) -> bool {
        matches!((self, scope), (StoreKind::UserStore, Scope::User(_)) | (StoreKind::StaticStore, Scope::Static))
    }
}

impl fmt::Display for StoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StoreKind {
    type Err = FlareError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "userStore" => Ok(StoreKind::UserStore),
            "staticStore" => Ok(StoreKind::StaticStore),
            other => Err(FlareError::NotFound(format!("store {other}"))),
        }
    }
}

pub struct StoreService {
    backend: Arc<dyn Backend>,
}

impl StoreService {
    pub fn new(backend: Arc<dyn Backend>) -> Self {
        Self { backend }
    }

    pub fn backend(&self) -> &Arc<dyn Backend> {
        &self.backend
    }

    /// Stores `fields` as a new record. Writes to either store need an
    /// authenticated principal; userStore records are owned by it.
    pub fn put(
        &self,
        app: &AppId,
        principal: &Principal,
        kind: StoreKind,
        collection: Collection,
        fields: Fields,
    ) -> Result<RecordId> {
        let user = principal.user().ok_or(FlareError::Unauthenticated)?;
        let scope = match kind {
            StoreKind::UserStore => Scope::User(user.clone()),
            StoreKind::StaticStore => Scope::Static,
        };
        Ok(self.backend.append(app, scope, collection, fields)?.record_id)
    }

    /// Newest-first records visible to `principal`. A userStore read without
    /// an owner filter reads the principal's own records.
    pub fn get(
        &self,
        app: &AppId,
        principal: &Principal,
        kind: StoreKind,
        spec: &QuerySpec,
    ) -> Result<Vec<VisibleRecord>> {
        spec.validate()?;
        let scope = match kind {
            StoreKind::StaticStore => {
                if spec.owner_filter.is_some() {
                    return Err(FlareError::validation("staticStore records have no owner to filter on"));
                }
                Scope::Static
            }
            StoreKind::UserStore => match (&spec.owner_filter, principal.user()) {
                (Some(owner), _) | (None, Some(owner)) => Scope::User(owner.clone()),
                (None, None) => return Err(FlareError::Unauthenticated),
            },
        };
        let limit = spec.limit();
        let mut out = Vec::with_capacity(limit.min(16));
        if limit == 0 {
            return Ok(out);
        }
        self.backend.scan(app, &scope, spec, &mut |r| {
            if let Some(v) = view(r, principal, &spec.field_names) {
                out.push(v);
            }
            out.len() < limit
        })?;
        Ok(out)
    }

    /// The staticStore's newest entries; identical for every caller.
    pub fn static_recent(&self, app: &AppId, spec: &QuerySpec) -> Result<Vec<VisibleRecord>> {
        self.get(app, &Principal::Anonymous, StoreKind::StaticStore, spec)
    }

    fn modifiable(&self, app: &AppId, principal: &Principal, kind: StoreKind, record_id: &RecordId) -> Result<Record> {
        let user = principal.user().ok_or(FlareError::Unauthenticated)?;
        let record = self
            .backend
            .get(app, record_id)
            .filter(|r| kind.holds(&r.scope))
            .ok_or_else(|| FlareError::NotFound(format!("record {record_id}")))?;
        match &record.scope {
            Scope::User(owner) if owner != user => Err(FlareError::Forbidden),
            _ => Ok(record),
        }
    }

    pub fn update(
        &self,
        app: &AppId,
        principal: &Principal,
        kind: StoreKind,
        record_id: &RecordId,
        patch: Fields,
    ) -> Result<()> {
        self.modifiable(app, principal, kind, record_id)?;
        self.backend.update(app, record_id, patch)?;
        Ok(())
    }

    pub fn delete(&self, app: &AppId, principal: &Principal, kind: StoreKind, record_id: &RecordId) -> Result<()> {
        self.modifiable(app, principal, kind, record_id)?;
        self.backend.delete(app, record_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Engine;
    use flare_core::{FieldEntry, FieldName, UserId};

    struct Fixture {
        _dir: tempfile::TempDir,
        store: StoreService,
    }

    fn fixture() -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        let engine = Arc::new(Engine::recover(dir.path().join("flare.log")).unwrap());
        Fixture { _dir: dir, store: StoreService::new(engine) }
    }

    fn app() -> AppId {
        AppId::from("app1")
    }

    fn alice() -> Principal {
        Principal::User(UserId::new("alice"))
    }

    fn bob() -> Principal {
        Principal::User(UserId::new("bob"))
    }

    fn post(value: &str, access: Option<flare_core::Visibility>) -> Fields {
        let mut f = Fields::new();
        let entry = match access {
            Some(a) => FieldEntry::new(value, a),
            None => serde_json::from_str(&format!(r#"{{"value":"{value}"}}"#)).unwrap(),
        };
        f.insert(FieldName::parse("post").unwrap(), entry);
        f
    }

    fn posts() -> Collection {
        Collection::parse("posts").unwrap()
    }

    fn spec() -> QuerySpec {
        QuerySpec::new([FieldName::parse("post").unwrap()])
    }

    fn values(records: &[VisibleRecord]) -> Vec<&str> {
        records.iter().map(|r| r.fields.values().next().unwrap().as_str()).collect()
    }

    use flare_core::Visibility::{Private, Public};

    #[test]
    fn own_timeline_includes_private_posts() {
        let f = fixture();
        for i in 0..12 {
            let access = if i % 2 == 0 { Public } else { Private };
            f.store.put(&app(), &alice(), StoreKind::UserStore, posts(), post(&i.to_string(), Some(access))).unwrap();
        }
        let got = f.store.get(&app(), &alice(), StoreKind::UserStore, &spec().count(10)).unwrap();
        assert_eq!(values(&got), ["11", "10", "9", "8", "7", "6", "5", "4", "3", "2"]);
        assert!(got.iter().all(|r| r.owner_id == Some(UserId::new("alice"))));
    }

    #[test]
    fn other_viewers_get_exactly_the_public_posts() {
        let f = fixture();
        for i in 0..12 {
            let access = if i < 6 { Public } else { Private };
            f.store.put(&app(), &alice(), StoreKind::UserStore, posts(), post(&format!("p{i}"), Some(access))).unwrap();
        }
        let spec = spec().owner(UserId::new("alice")).count(10);
        for viewer in [bob(), Principal::Anonymous] {
            let got = f.store.get(&app(), &viewer, StoreKind::UserStore, &spec).unwrap();
            assert_eq!(values(&got), ["p5", "p4", "p3", "p2", "p1", "p0"]);
        }
    }

    #[test]
    fn access_defaults_to_private() {
        let f = fixture();
        f.store.put(&app(), &alice(), StoreKind::UserStore, posts(), post("draft", None)).unwrap();
        let spec = spec().owner(UserId::new("alice"));
        assert!(f.store.get(&app(), &bob(), StoreKind::UserStore, &spec).unwrap().is_empty());
        assert_eq!(f.store.get(&app(), &alice(), StoreKind::UserStore, &spec).unwrap().len(), 1);
    }

    #[test]
    fn anonymous_cannot_write_or_read_own() {
        let f = fixture();
        for kind in [StoreKind::UserStore, StoreKind::StaticStore] {
            assert!(matches!(
                f.store.put(&app(), &Principal::Anonymous, kind, posts(), post("x", Some(Public))),
                Err(FlareError::Unauthenticated)
            ));
        }
        assert!(matches!(
            f.store.get(&app(), &Principal::Anonymous, StoreKind::UserStore, &spec()),
            Err(FlareError::Unauthenticated)
        ));
    }

    #[test]
    fn ownership_rules_for_update_and_delete() {
        let f = fixture();
        let id = f.store.put(&app(), &alice(), StoreKind::UserStore, posts(), post("mine", Some(Public))).unwrap();
        assert!(matches!(
            f.store.update(&app(), &bob(), StoreKind::UserStore, &id, post("hacked", Some(Public))),
            Err(FlareError::Forbidden)
        ));
        assert!(matches!(f.store.delete(&app(), &bob(), StoreKind::UserStore, &id), Err(FlareError::Forbidden)));
        assert!(matches!(
            f.store.delete(&app(), &Principal::Anonymous, StoreKind::UserStore, &id),
            Err(FlareError::Unauthenticated)
        ));
        // Addressed through the wrong store the record does not exist.
        assert!(matches!(f.store.delete(&app(), &alice(), StoreKind::StaticStore, &id), Err(FlareError::NotFound(_))));

        f.store.update(&app(), &alice(), StoreKind::UserStore, &id, post("edited", Some(Public))).unwrap();
        let got = f.store.get(&app(), &bob(), StoreKind::UserStore, &spec().owner(UserId::new("alice"))).unwrap();
        assert_eq!(values(&got), ["edited"]);

        f.store.delete(&app(), &alice(), StoreKind::UserStore, &id).unwrap();
        assert!(f.store.get(&app(), &alice(), StoreKind::UserStore, &spec()).unwrap().is_empty());
        assert!(matches!(f.store.delete(&app(), &alice(), StoreKind::UserStore, &id), Err(FlareError::NotFound(_))));
        assert!(matches!(
            f.store.update(&app(), &alice(), StoreKind::UserStore, &RecordId::from("nope"), post("x", None)),
            Err(FlareError::NotFound(_))
        ));
    }

    #[test]
    fn static_store_is_shared() {
        let f = fixture();
        assert!(f.store.static_recent(&app(), &spec().count(10)).unwrap().is_empty());
        for i in 0..15 {
            let who = if i % 2 == 0 { alice() } else { bob() };
            f.store.put(&app(), &who, StoreKind::StaticStore, posts(), post(&i.to_string(), None)).unwrap();
        }
        let recent = f.store.static_recent(&app(), &spec().count(10)).unwrap();
        assert_eq!(values(&recent), ["14", "13", "12", "11", "10", "9", "8", "7", "6", "5"]);
        let as_alice = f.store.get(&app(), &alice(), StoreKind::StaticStore, &spec().count(10)).unwrap();
        let as_bob = f.store.get(&app(), &bob(), StoreKind::StaticStore, &spec().count(10)).unwrap();
        assert_eq!(as_alice, as_bob);
        assert_eq!(as_alice, recent);
        // Any authenticated user may edit static entries.
        let id = recent[0].record_id.clone();
        f.store.update(&app(), &bob(), StoreKind::StaticStore, &id, post("bob edit", None)).unwrap();
        assert!(matches!(
            f.store.get(&app(), &alice(), StoreKind::StaticStore, &spec().owner(UserId::new("alice"))),
            Err(FlareError::Validation(_))
        ));
    }

    #[test]
    fn apps_do_not_share_records() {
        let f = fixture();
        f.store.put(&app(), &alice(), StoreKind::UserStore, posts(), post("a1", Some(Public))).unwrap();
        f.store.put(&app(), &alice(), StoreKind::StaticStore, posts(), post("s1", Some(Public))).unwrap();
        let other = AppId::from("app2");
        assert!(f.store.get(&other, &alice(), StoreKind::UserStore, &spec()).unwrap().is_empty());
        assert!(f.store.static_recent(&other, &spec()).unwrap().is_empty());
    }

    #[test]
    fn zero_count_is_empty() {
        let f = fixture();
        f.store.put(&app(), &alice(), StoreKind::UserStore, posts(), post("a", Some(Public))).unwrap();
        assert!(f.store.get(&app(), &alice(), StoreKind::UserStore, &spec().count(0)).unwrap().is_empty());
    }
}
