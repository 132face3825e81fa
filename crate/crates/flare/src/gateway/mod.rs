//! Web API: one contract per service group, many interchangeable providers.
//!
//! Only the blogging group has a contract. A caller connects a provider to
//! get a handle; the handle is bound to that caller and persisted as a
//! private record in their userStore. Calls on one handle are serialized.

mod loopback;
mod mockblog;

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, RwLock};

use flare_core::web::{BlogPost, ProviderInfo, ServiceGroup};
use flare_core::{
    AppId, Collection, FieldEntry, FieldName, Fields, Principal, QuerySpec, UserId,
};
use serde_json::{Map, Value};

use crate::error::{FlareError, Result};
use crate::store::{StoreKind, StoreService};

pub use loopback::Loopback;
pub use mockblog::MockBlog;

pub type Credentials = BTreeMap<String, String>;
pub type ExtraResult = Map<String, Value>;

/// Who a handle belongs to and which provider it talks to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connection {
    pub handle_id: String,
    pub app_id: AppId,
    pub user_id: UserId,
    pub provider_id: String,
}

/// The minimum blogging contract every provider implements.
pub trait BlogProvider: Send + Sync {
    fn id(&self) -> &'static str;

    /// Extra features reachable through [`WebGateway::invoke_extra`].
    fn capabilities(&self) -> &'static [&'static str];

    /// Checks `credentials` and prepares provider-side state for `conn`.
    fn connect(&self, conn: &Connection, credentials: &Credentials) -> Result<()>;

    fn create_post(&self, conn: &Connection, title: &str, body: &str) -> Result<String>;

    /// At most `count` posts of this connection, newest first.
    fn list_recent(&self, conn: &Connection, count: usize) -> Result<Vec<BlogPost>>;

    /// Called only for features listed in [`BlogProvider::capabilities`].
    fn invoke_extra(&self, conn: &Connection, feature: &str, params: &Map<String, Value>) -> Result<ExtraResult>;

    fn disconnect(&self, _conn: &Connection) {}
}

/// Upper bound on posts returned by one listing, shared by every provider.
pub const MAX_POSTS: usize = 100;

struct Slot {
    conn: Connection,
    calls: Mutex<()>,
}

pub struct WebGateway {
    providers: Vec<Arc<dyn BlogProvider>>,
    store: Arc<StoreService>,
    handles: RwLock<HashMap<String, Arc<Slot>>>,
}

const HANDLE_COLLECTION: &str = "web_handles";

fn field(name: &str) -> FieldName {
    FieldName::parse(name).expect("static field name")
}

impl WebGateway {
    /// Gateway with the built-in blogging providers.
    pub fn new(store: Arc<StoreService>) -> Self {
        let providers: Vec<Arc<dyn BlogProvider>> =
            vec![Arc::new(MockBlog::default()), Arc::new(Loopback::new(store.clone()))];
        Self::with_providers(store, providers)
    }

    pub fn with_providers(store: Arc<StoreService>, providers: Vec<Arc<dyn BlogProvider>>) -> Self {
        Self { providers, store, handles: RwLock::new(HashMap::new()) }
    }

    pub fn list_groups(&self) -> [ServiceGroup; 9] {
        ServiceGroup::ALL
    }

    /// Providers registered for `group`; empty for groups without a contract.
    pub fn list_providers(&self, group: &str) -> Result<Vec<ProviderInfo>> {
        let group: ServiceGroup = group.parse().map_err(|_| FlareError::UnknownGroup(group.into()))?;
        if !group.implemented() {
            return Ok(Vec::new());
        }
        Ok(self
            .providers
            .iter()
            .map(|p| ProviderInfo {
                provider_id: p.id().into(),
                capabilities: p.capabilities().iter().map(|c| c.to_string()).collect(),
            })
            .collect())
    }

    fn provider(&self, id: &str) -> Result<&Arc<dyn BlogProvider>> {
        self.providers.iter().find(|p| p.id() == id).ok_or_else(|| FlareError::UnknownProvider(id.into()))
    }

    pub fn connect(
        &self,
        app: &AppId,
        principal: &Principal,
        provider_id: &str,
        credentials: &Credentials,
    ) -> Result<String> {
        let user = principal.user().ok_or(FlareError::Unauthenticated)?;
        let provider = self.provider(provider_id)?;
        let conn = Connection {
            handle_id: uuid::Uuid::new_v4().simple().to_string(),
            app_id: app.clone(),
            user_id: user.clone(),
            provider_id: provider_id.into(),
        };
        provider.connect(&conn, credentials)?;
        let mut fields = Fields::new();
        fields.insert(field("handle_id"), FieldEntry::private(conn.handle_id.as_str()));
        fields.insert(field("provider"), FieldEntry::private(provider_id));
        fields.insert(
            field("credentials"),
            FieldEntry::private(serde_json::to_string(credentials).expect("string maps serialize")),
        );
        self.store.put(
            app,
            principal,
            StoreKind::UserStore,
            Collection::parse(HANDLE_COLLECTION).expect("static collection"),
            fields,
        )?;
        let handle_id = conn.handle_id.clone();
        self.handles.write().unwrap().insert(handle_id.clone(), Arc::new(Slot { conn, calls: Mutex::new(()) }));
        Ok(handle_id)
    }

    fn handle_spec() -> QuerySpec {
        QuerySpec::new([field("handle_id")]).collection(Collection::parse(HANDLE_COLLECTION).unwrap())
    }

    /// The caller's slot for `handle_id`, reloading it from their userStore
    /// after a restart.
    fn slot(&self, app: &AppId, principal: &Principal, handle_id: &str) -> Result<Arc<Slot>> {
        let user = principal.user().ok_or(FlareError::Unauthenticated)?;
        if let Some(slot) = self.handles.read().unwrap().get(handle_id) {
            return if &slot.conn.app_id == app && &slot.conn.user_id == user {
                Ok(slot.clone())
            } else {
                Err(FlareError::InvalidHandle)
            };
        }
        let mut spec = Self::handle_spec();
        spec.field_names.push(field("provider"));
        let found = self
            .store
            .get(app, principal, StoreKind::UserStore, &spec)?
            .into_iter()
            .find(|r| r.fields.get(&field("handle_id")).map(String::as_str) == Some(handle_id))
            .ok_or(FlareError::InvalidHandle)?;
        let provider_id = found.fields.get(&field("provider")).cloned().unwrap_or_default();
        self.provider(&provider_id).map_err(|_| FlareError::InvalidHandle)?;
        let slot = Arc::new(Slot {
            conn: Connection {
                handle_id: handle_id.into(),
                app_id: app.clone(),
                user_id: user.clone(),
                provider_id,
            },
            calls: Mutex::new(()),
        });
        Ok(self.handles.write().unwrap().entry(handle_id.into()).or_insert(slot).clone())
    }

    fn call<T>(
        &self,
        app: &AppId,
        principal: &Principal,
        handle_id: &str,
        f: impl FnOnce(&dyn BlogProvider, &Connection) -> Result<T>,
    ) -> Result<T> {
        let slot = self.slot(app, principal, handle_id)?;
        let provider = self.provider(&slot.conn.provider_id)?;
        let _serial = slot.calls.lock().unwrap();
        f(provider.as_ref(), &slot.conn)
    }

    pub fn create_post(&self, app: &AppId, principal: &Principal, handle_id: &str, title: &str, body: &str) -> Result<String> {
        self.call(app, principal, handle_id, |p, c| p.create_post(c, title, body))
    }

    pub fn list_recent_posts(&self, app: &AppId, principal: &Principal, handle_id: &str, count: usize) -> Result<Vec<BlogPost>> {
        self.call(app, principal, handle_id, |p, c| p.list_recent(c, count.min(MAX_POSTS)))
    }

    pub fn invoke_extra(
        &self,
        app: &AppId,
        principal: &Principal,
        handle_id: &str,
        feature: &str,
        params: &Map<String, Value>,
    ) -> Result<ExtraResult> {
        self.call(app, principal, handle_id, |p, c| {
            if !p.capabilities().contains(&feature) {
                return Err(FlareError::UnsupportedFeature(feature.into()));
            }
            p.invoke_extra(c, feature, params)
        })
    }

    /// Revokes a handle. Later calls on it fail with `InvalidHandle`.
    pub fn disconnect(&self, app: &AppId, principal: &Principal, handle_id: &str) -> Result<()> {
        let slot = self.slot(app, principal, handle_id)?;
        let _serial = slot.calls.lock().unwrap();
        let records = self.store.get(app, principal, StoreKind::UserStore, &Self::handle_spec())?;
        for r in records.iter().filter(|r| r.fields.get(&field("handle_id")).map(String::as_str) == Some(handle_id)) {
            self.store.delete(app, principal, StoreKind::UserStore, &r.record_id)?;
        }
        self.handles.write().unwrap().remove(handle_id);
        if let Ok(p) = self.provider(&slot.conn.provider_id) {
            p.disconnect(&slot.conn);
        }
        Ok(())
    }
}
