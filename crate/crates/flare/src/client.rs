//! Access library for the REST API.
//!
//! A [`Session`] remembers the developer key, the bound app and, after a
//! successful [`Users::authenticate`], the credentials sent with every later
//! call. Sessions are cheap to clone and every operation takes `&self`, so
//! one session can have several calls in flight.
//!
//! ```no_run
//! # async fn demo() -> Result<(), flare::client::ClientError> {
//! use flare::client::{QueryOptions, Session};
//! use flare::core::{FieldEntry, FieldName, Fields};
//!
//! let session = Session::new("http://127.0.0.1:8080")?;
//! session.dev().use_key("F92KLF5434TR4H");
//! session.dev().register_app("flitterApp").await?;
//! session.users().authenticate("alice", "pw1").await?;
//!
//! let mut post = Fields::new();
//! post.insert(FieldName::parse("post").unwrap(), FieldEntry::public("hello"));
//! session.user_store().put(post, "posts").await?;
//! let mine = session.user_store().get(&["post"], &QueryOptions::count(10)).await?;
//! # Ok(()) }
//! ```

use std::sync::{Arc, RwLock};

use flare_core::web::{BlogPost, ProviderInfo};
use flare_core::{AppId, Fields, RecordId, UserId, VisibleRecord};
use reqwest::{Method, StatusCode, Url};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::ErrorCode;
use crate::users::{Attributes, AuthResult, PublicUser};
use crate::wire::{self, HEADER_PASSWORD, HEADER_USER};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    /// The server could not be reached or the exchange failed mid-way.
    #[error("transport error: {0}")]
    Transport(#[from] reqwest::Error),
    /// The server answered with a wire error.
    #[error("{code}: {message}")]
    Api { code: ErrorCode, message: String },
    /// A service group without a contract.
    #[error("service group {0} is not implemented")]
    NotImplemented(String),
    /// The call cannot be made in the session's current state.
    #[error("{0}")]
    Precondition(&'static str),
    /// The server answered with something this library does not understand.
    #[error("unexpected response ({status}): {detail}")]
    Protocol { status: u16, detail: String },
}

impl ClientError {
    pub fn code(&self) -> Option<ErrorCode> {
        match self {
            ClientError::Api { code, .. } => Some(*code),
            _ => None,
        }
    }

    pub fn is_transport(&self) -> bool {
        matches!(self, ClientError::Transport(_))
    }
}

pub type Result<T, E = ClientError> = std::result::Result<T, E>;

/// Filters for store reads.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryOptions {
    pub count: Option<u32>,
    /// Owner user id, or `@username`.
    pub user_id: Option<String>,
    pub collection: Option<String>,
}

impl QueryOptions {
    pub fn count(n: u32) -> Self {
        Self { count: Some(n), ..Self::default() }
    }

    pub fn user(mut self, user_id: impl Into<String>) -> Self {
        self.user_id = Some(user_id.into());
        self
    }

    pub fn collection(mut self, collection: impl Into<String>) -> Self {
        self.collection = Some(collection.into());
        self
    }
}

#[derive(Debug, Default)]
struct State {
    dev_key: Option<String>,
    app_id: Option<AppId>,
    credentials: Option<(UserId, String)>,
}

#[derive(Debug)]
struct Inner {
    http: reqwest::Client,
    base: Url,
    state: RwLock<State>,
}

#[derive(Debug, Clone)]
pub struct Session {
    inner: Arc<Inner>,
}

enum Auth {
    Required,
    IfAvailable,
    None,
}

impl Session {
    pub fn new(server_url: &str) -> Result<Self> {
        let base = Url::parse(server_url)
            .ok()
            .filter(|u| !u.cannot_be_a_base())
            .ok_or(ClientError::Precondition("server URL is not a valid base URL"))?;
        Ok(Self {
            inner: Arc::new(Inner { http: reqwest::Client::new(), base, state: RwLock::default() }),
        })
    }

    pub fn server_url(&self) -> &Url {
        &self.inner.base
    }

    pub fn app_id(&self) -> Option<AppId> {
        self.inner.state.read().unwrap().app_id.clone()
    }

    /// Binds a previously registered app without a round trip.
    pub fn bind_app(&self, app_id: AppId) {
        self.inner.state.write().unwrap().app_id = Some(app_id);
    }

    pub fn user_id(&self) -> Option<UserId> {
        self.inner.state.read().unwrap().credentials.as_ref().map(|(u, _)| u.clone())
    }

    /// Uses stored credentials without re-authenticating.
    pub fn set_credentials(&self, user_id: UserId, password: impl Into<String>) {
        self.inner.state.write().unwrap().credentials = Some((user_id, password.into()));
    }

    pub fn clear_credentials(&self) {
        self.inner.state.write().unwrap().credentials = None;
    }

    pub fn dev(&self) -> Dev<'_> {
        Dev(self)
    }

    pub fn users(&self) -> Users<'_> {
        Users(self)
    }

    pub fn user_store(&self) -> Store<'_> {
        Store { session: self, name: "userStore" }
    }

    pub fn static_store(&self) -> Store<'_> {
        Store { session: self, name: "staticStore" }
    }

    pub fn web(&self) -> Web<'_> {
        Web(self)
    }

    pub fn blogging(&self) -> Blogging<'_> {
        Blogging(self)
    }

    fn app(&self) -> Result<AppId> {
        self.app_id().ok_or(ClientError::Precondition("no app bound: call register_app first"))
    }

    fn url(&self, segments: &[&str], query: &[(&str, String)]) -> Url {
        let mut url = self.inner.base.clone();
        url.path_segments_mut().expect("checked in new").pop_if_empty().extend(segments);
        if !query.is_empty() {
            url.query_pairs_mut().extend_pairs(query.iter().map(|(k, v)| (*k, v.as_str())));
        }
        url
    }

    fn app_url(&self, segments: &[&str], query: &[(&str, String)]) -> Result<Url> {
        let app = self.app()?;
        let mut all = vec!["v1", "apps", app.as_str()];
        all.extend_from_slice(segments);
        Ok(self.url(&all, query))
    }

    async fn send<T: DeserializeOwned>(
        &self,
        method: Method,
        url: Url,
        auth: Auth,
        body: Option<&(impl Serialize + ?Sized)>,
    ) -> Result<T> {
        let mut req = self.inner.http.request(method, url);
        let credentials = self.inner.state.read().unwrap().credentials.clone();
        match (auth, credentials) {
            (Auth::Required, None) => return Err(ClientError::Precondition("not authenticated")),
            (Auth::Required | Auth::IfAvailable, Some((user, password))) => {
                req = req.header(HEADER_USER, user.as_str()).header(HEADER_PASSWORD, password);
            }
            _ => {}
        }
        if let Some(body) = body {
            req = req.json(body);
        }
        let response = req.send().await?;
        let status = response.status();
        let bytes = response.bytes().await?;
        decode(status, &bytes)
    }
}

fn decode<T: DeserializeOwned>(status: StatusCode, bytes: &[u8]) -> Result<T> {
    let protocol = |detail: String| ClientError::Protocol { status: status.as_u16(), detail };
    if status.is_success() {
        return serde_json::from_slice(bytes).map_err(|e| protocol(e.to_string()));
    }
    if status == StatusCode::NOT_IMPLEMENTED {
        if let Ok(marker) = serde_json::from_slice::<wire::NotImplemented>(bytes) {
            return Err(ClientError::NotImplemented(marker.group));
        }
    }
    let body: wire::ErrorBody =
        serde_json::from_slice(bytes).map_err(|_| protocol(String::from_utf8_lossy(bytes).into_owned()))?;
    let code = body.error.parse().map_err(|_| protocol(format!("unknown error code {}", body.error)))?;
    Err(ClientError::Api { code, message: body.message })
}

const NO_BODY: Option<&()> = None;

/// Developer key and app registration.
pub struct Dev<'a>(&'a Session);

impl Dev<'_> {
    pub fn use_key(&self, key: impl Into<String>) {
        self.0.inner.state.write().unwrap().dev_key = Some(key.into());
    }

    /// Registers (or re-registers) `app_name` and binds the session to it.
    pub async fn register_app(&self, app_name: &str) -> Result<AppId> {
        let key = self.0.inner.state.read().unwrap().dev_key.clone();
        let key = key.ok_or(ClientError::Precondition("no developer key: call use_key first"))?;
        let body = wire::RegisterApp { dev_key: key, app_name: app_name.into() };
        let url = self.0.url(&["v1", "apps"], &[]);
        let created: wire::AppCreated = self.0.send(Method::POST, url, Auth::None, Some(&body)).await?;
        self.0.bind_app(created.app_id.clone());
        Ok(created.app_id)
    }
}

/// Users API.
pub struct Users<'a>(&'a Session);

impl Users<'_> {
    pub async fn create(&self, username: &str, password: &str, attributes: Attributes) -> Result<UserId> {
        let body = wire::CreateUser { username: username.into(), password: password.into(), attributes };
        let url = self.0.app_url(&["users"], &[])?;
        let created: wire::UserCreated = self.0.send(Method::POST, url, Auth::None, Some(&body)).await?;
        Ok(created.user_id)
    }

    /// On success the session sends these credentials with every later call;
    /// on failure it is left as it was.
    pub async fn authenticate(&self, username: &str, password: &str) -> Result<AuthResult> {
        let body = wire::Credentials { username: username.into(), password: password.into() };
        let url = self.0.app_url(&["users", "authenticate"], &[])?;
        let outcome: wire::AuthOutcome = self.0.send(Method::POST, url, Auth::None, Some(&body)).await?;
        match (outcome.ok, outcome.user_id) {
            (true, Some(user_id)) => {
                self.0.set_credentials(user_id.clone(), password);
                Ok(AuthResult::Success(user_id))
            }
            (false, _) => Ok(AuthResult::Failure),
            (true, None) => Err(ClientError::Protocol { status: 200, detail: "success without userID".into() }),
        }
    }

    pub async fn get(&self, username: &str) -> Result<PublicUser> {
        let url = self.0.app_url(&["users", username], &[])?;
        self.0.send(Method::GET, url, Auth::Required, NO_BODY).await
    }

    pub async fn update(&self, password: Option<&str>, attributes: Option<Attributes>) -> Result<()> {
        let body = wire::UpdateUser { password: password.map(Into::into), attributes };
        let url = self.0.app_url(&["users", "me"], &[])?;
        let _: wire::Ack = self.0.send(Method::PATCH, url, Auth::Required, Some(&body)).await?;
        if let Some(pw) = password {
            if let Some(user) = self.0.user_id() {
                self.0.set_credentials(user, pw);
            }
        }
        Ok(())
    }

    pub async fn delete_me(&self) -> Result<()> {
        let url = self.0.app_url(&["users", "me"], &[])?;
        let _: wire::Ack = self.0.send(Method::DELETE, url, Auth::Required, NO_BODY).await?;
        self.0.clear_credentials();
        Ok(())
    }
}

/// userStore or staticStore.
pub struct Store<'a> {
    session: &'a Session,
    name: &'static str,
}

impl Store<'_> {
    pub async fn put(&self, data: Fields, collection: &str) -> Result<RecordId> {
        let collection = flare_core::Collection::parse(collection)
            .map_err(|_| ClientError::Precondition("invalid collection name"))?;
        let body = wire::PutRecord { collection, fields: data };
        let url = self.session.app_url(&[self.name, "records"], &[])?;
        let created: wire::RecordCreated = self.session.send(Method::POST, url, Auth::Required, Some(&body)).await?;
        Ok(created.record_id)
    }

    pub async fn get(&self, field_names: &[&str], options: &QueryOptions) -> Result<Vec<VisibleRecord>> {
        if field_names.is_empty() {
            return Err(ClientError::Precondition("at least one field name is required"));
        }
        let mut query = vec![("fields", field_names.join(","))];
        if let Some(n) = options.count {
            query.push(("count", n.to_string()));
        }
        if let Some(u) = &options.user_id {
            query.push(("userID", u.clone()));
        }
        if let Some(c) = &options.collection {
            query.push(("collection", c.clone()));
        }
        // Reading someone else's public userStore data needs no login.
        let auth = if self.name == "userStore" && options.user_id.is_none() { Auth::Required } else { Auth::IfAvailable };
        let url = self.session.app_url(&[self.name, "records"], &query)?;
        let records: wire::Records = self.session.send(Method::GET, url, auth, NO_BODY).await?;
        Ok(records.records)
    }

    pub async fn update(&self, record_id: &RecordId, patch: Fields) -> Result<()> {
        let url = self.session.app_url(&[self.name, "records", record_id.as_str()], &[])?;
        let body = wire::PatchRecord { fields: patch };
        let _: wire::Ack = self.session.send(Method::PATCH, url, Auth::Required, Some(&body)).await?;
        Ok(())
    }

    pub async fn delete(&self, record_id: &RecordId) -> Result<()> {
        let url = self.session.app_url(&[self.name, "records", record_id.as_str()], &[])?;
        let _: wire::Ack = self.session.send(Method::DELETE, url, Auth::Required, NO_BODY).await?;
        Ok(())
    }
}

/// Web API discovery.
pub struct Web<'a>(&'a Session);

impl Web<'_> {
    pub async fn groups(&self) -> Result<Vec<wire::GroupInfo>> {
        let url = self.0.app_url(&["web", "groups"], &[])?;
        let groups: wire::Groups = self.0.send(Method::GET, url, Auth::IfAvailable, NO_BODY).await?;
        Ok(groups.groups)
    }

    pub async fn providers(&self, group: &str) -> Result<Vec<ProviderInfo>> {
        let url = self.0.app_url(&["web", group, "providers"], &[])?;
        let providers: wire::Providers = self.0.send(Method::GET, url, Auth::IfAvailable, NO_BODY).await?;
        Ok(providers.providers)
    }
}

/// The blogging group's common contract.
pub struct Blogging<'a>(&'a Session);

impl Blogging<'_> {
    pub async fn connect(&self, provider: &str, credentials: wire::Connect) -> Result<String> {
        let url = self.0.app_url(&["web", "blogging", provider, "connect"], &[])?;
        let c: wire::Connected = self.0.send(Method::POST, url, Auth::Required, Some(&credentials)).await?;
        Ok(c.handle_id)
    }

    pub async fn disconnect(&self, handle: &str) -> Result<()> {
        let url = self.0.app_url(&["web", "blogging", handle], &[])?;
        let _: wire::Ack = self.0.send(Method::DELETE, url, Auth::Required, NO_BODY).await?;
        Ok(())
    }

    pub async fn create_post(&self, handle: &str, title: &str, body: &str) -> Result<String> {
        let url = self.0.app_url(&["web", "blogging", handle, "posts"], &[])?;
        let req = wire::NewPost { title: title.into(), body: body.into() };
        let c: wire::PostCreated = self.0.send(Method::POST, url, Auth::Required, Some(&req)).await?;
        Ok(c.post_ref)
    }

    pub async fn list_recent_posts(&self, handle: &str, count: usize) -> Result<Vec<BlogPost>> {
        let url = self.0.app_url(&["web", "blogging", handle, "posts"], &[("count", count.to_string())])?;
        let posts: wire::Posts = self.0.send(Method::GET, url, Auth::Required, NO_BODY).await?;
        Ok(posts.posts)
    }

    pub async fn invoke_extra(&self, handle: &str, feature: &str, params: Map<String, Value>) -> Result<Map<String, Value>> {
        let url = self.0.app_url(&["web", "blogging", handle, "extra", feature], &[])?;
        self.0.send(Method::POST, url, Auth::Required, Some(&wire::Extra { params })).await
    }
}
