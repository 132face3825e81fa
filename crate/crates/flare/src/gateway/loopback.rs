use std::sync::Arc;

use flare_core::web::BlogPost;
use flare_core::{Collection, FieldEntry, FieldName, Fields, Principal, QuerySpec};
use serde_json::{Map, Value};

use super::{BlogProvider, Connection, Credentials, ExtraResult};
use crate::error::{FlareError, Result};
use crate::store::{StoreKind, StoreService};

/// Blogging provider backed by the app's own staticStore. Each handle
/// writes to its own `loopback-<handle>` collection.
pub struct Loopback {
    store: Arc<StoreService>,
}

impl Loopback {
    pub fn new(store: Arc<StoreService>) -> Self {
        Self { store }
    }

    fn collection(conn: &Connection) -> Result<Collection> {
        Ok(Collection::parse(format!("loopback-{}", conn.handle_id))?)
    }
}

fn field(name: &str) -> FieldName {
    FieldName::parse(name).expect("static field name")
}

impl BlogProvider for Loopback {
    fn id(&self) -> &'static str {
        "loopback"
    }

    fn capabilities(&self) -> &'static [&'static str] {
        &[]
    }

    fn connect(&self, conn: &Connection, _credentials: &Credentials) -> Result<()> {
        Self::collection(conn).map(|_| ())
    }

    fn create_post(&self, conn: &Connection, title: &str, body: &str) -> Result<String> {
        let mut fields = Fields::new();
        fields.insert(field("title"), FieldEntry::public(title));
        fields.insert(field("body"), FieldEntry::public(body));
        let id = self.store.put(
            &conn.app_id,
            &Principal::User(conn.user_id.clone()),
            StoreKind::StaticStore,
            Self::collection(conn)?,
            fields,
        )?;
        Ok(id.into_inner())
    }

    fn list_recent(&self, conn: &Connection, count: usize) -> Result<Vec<BlogPost>> {
        let spec = QuerySpec::new([field("title"), field("body")])
            .collection(Self::collection(conn)?)
            .count(count as u32);
        Ok(self
            .store
            .static_recent(&conn.app_id, &spec)?
            .into_iter()
            .map(|r| BlogPost {
                post_ref: r.record_id.into_inner(),
                title: r.fields.get(&field("title")).cloned().unwrap_or_default(),
                body: r.fields.get(&field("body")).cloned().unwrap_or_default(),
                published_at: r.stamp.wall_millis,
            })
            .collect())
    }

    fn invoke_extra(&self, _conn: &Connection, feature: &str, _params: &Map<String, Value>) -> Result<ExtraResult> {
        Err(FlareError::UnsupportedFeature(feature.into()))
    }
}
