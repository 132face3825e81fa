//! REST binding. Paths, headers and bodies are the public wire contract;
//! see the endpoint table in the README.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, HeaderName, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, patch, post};
use axum::{Json, Router};
use axum_server::tls_rustls::RustlsConfig;
use flare_core::web::ServiceGroup;
use flare_core::{AppId, Collection, FieldName, Principal, QuerySpec, RecordId, UserId};
use serde::de::DeserializeOwned;
use tokio::net::TcpListener;
use tower_http::cors::CorsLayer;
use tower_http::request_id::{MakeRequestUuid, PropagateRequestIdLayer, SetRequestIdLayer};
use tower_http::trace::TraceLayer;

use crate::config::TlsConfig;
use crate::error::{FlareError, Result};
use crate::store::StoreKind;
use crate::users::AuthResult;
use crate::wire::{self, HEADER_PASSWORD, HEADER_USER};
use crate::Flare;

const REQUEST_ID: HeaderName = HeaderName::from_static("x-request-id");

/// A [`FlareError`] rendered as `{"error": code, "message": text}`.
#[derive(Debug)]
pub struct ApiError(pub FlareError);

impl From<FlareError> for ApiError {
    fn from(e: FlareError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let code = self.0.code();
        let status = StatusCode::from_u16(code.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        if status.is_server_error() {
            tracing::error!(error = %self.0, "request failed");
        }
        let body = wire::ErrorBody { error: code.as_str().into(), message: self.0.to_string() };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

type Shared = Arc<Flare>;

/// Runs service code off the async executor; hashing and fsync block.
async fn blocking<T: Send + 'static>(
    flare: &Shared,
    f: impl FnOnce(&Flare) -> Result<T> + Send + 'static,
) -> ApiResult<T> {
    let flare = flare.clone();
    tokio::task::spawn_blocking(move || f(&flare)).await.expect("handler panicked").map_err(ApiError)
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T> {
    serde_json::from_slice(body).map_err(|e| FlareError::validation(format!("invalid request body: {e}")))
}

/// Credentials sent with a request, if any.
#[derive(Debug, Clone)]
struct Presented(Option<(String, String)>);

fn presented(headers: &HeaderMap) -> Result<Presented> {
    let read = |name: &str| {
        headers
            .get(name)
            .map(|v| String::from_utf8(v.as_bytes().to_vec()).map_err(|_| FlareError::Unauthenticated))
            .transpose()
    };
    match (read(HEADER_USER)?, read(HEADER_PASSWORD)?) {
        (None, None) => Ok(Presented(None)),
        (Some(u), Some(p)) => Ok(Presented(Some((u, p)))),
        _ => Err(FlareError::Unauthenticated),
    }
}

/// The app and verified principal a request runs as.
struct RequestContext {
    app: AppId,
    principal: Principal,
}

fn authenticate_request(flare: &Flare, app: &str, creds: Presented) -> Result<RequestContext> {
    let app = AppId::from(app);
    flare.registry.require(&app)?;
    let principal = match creds.0 {
        None => Principal::Anonymous,
        Some((user, password)) => {
            let user = UserId::new(user);
            flare.users.verify(&app, &user, &password)?;
            Principal::User(user)
        }
    };
    Ok(RequestContext { app, principal })
}

pub fn router(flare: Shared) -> Router {
    let api = Router::new()
        .route("/v1/apps", post(register_app))
        .route("/v1/apps/{app}/users", post(create_user))
        .route("/v1/apps/{app}/users/authenticate", post(authenticate))
        .route("/v1/apps/{app}/users/me", patch(update_me).delete(delete_me))
        .route("/v1/apps/{app}/users/{username}", get(get_user))
        .route("/v1/apps/{app}/{store}/records", post(put_record).get(get_records))
        .route("/v1/apps/{app}/{store}/records/{record}", patch(patch_record).delete(delete_record))
        .route("/v1/apps/{app}/web/groups", get(list_groups))
        .route("/v1/apps/{app}/web/{group}/providers", get(list_providers))
        .route("/v1/apps/{app}/web/{group}/{id}/connect", post(connect))
        .route("/v1/apps/{app}/web/{group}/{id}", delete(disconnect))
        .route("/v1/apps/{app}/web/{group}/{id}/posts", post(create_post).get(list_posts))
        .route("/v1/apps/{app}/web/{group}/{id}/extra/{feature}", post(invoke_extra))
        .fallback(|| async { ApiError(FlareError::NotFound("endpoint".into())) })
        .with_state(flare);
    api.layer(TraceLayer::new_for_http())
        .layer(PropagateRequestIdLayer::new(REQUEST_ID))
        .layer(SetRequestIdLayer::new(REQUEST_ID, MakeRequestUuid))
        .layer(CorsLayer::permissive())
}

/// Serves plain HTTP on `listener` until the process exits.
pub async fn serve(listener: TcpListener, flare: Shared) -> std::io::Result<()> {
    axum::serve(listener, router(flare)).await
}

/// Serves HTTPS on `addr` with a PEM certificate chain and key.
pub async fn serve_tls(addr: SocketAddr, tls: &TlsConfig, flare: Shared) -> std::io::Result<()> {
    let rustls = RustlsConfig::from_pem_file(&tls.cert_path, &tls.key_path).await?;
    let handle = axum_server::Handle::new();
    let announce = handle.clone();
    tokio::spawn(async move {
        if let Some(addr) = announce.listening().await {
            println!("listening on https://{addr}");
        }
    });
    axum_server::bind_rustls(addr, rustls).handle(handle).serve(router(flare).into_make_service()).await
}

async fn register_app(State(flare): State<Shared>, body: Bytes) -> ApiResult<Json<wire::AppCreated>> {
    let req: wire::RegisterApp = parse_body(&body)?;
    let app_id = blocking(&flare, move |f| f.registry.register_app(&req.dev_key, &req.app_name)).await?;
    Ok(Json(wire::AppCreated { app_id }))
}

async fn create_user(
    State(flare): State<Shared>,
    Path(app): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Json<wire::UserCreated>> {
    let creds = presented(&headers)?;
    let req: wire::CreateUser = parse_body(&body)?;
    let user_id = blocking(&flare, move |f| {
        let ctx = authenticate_request(f, &app, creds)?;
        f.users.create_user(&ctx.app, &req.username, &req.password, req.attributes)
    })
    .await?;
    Ok(Json(wire::UserCreated { user_id }))
}

async fn authenticate(
    State(flare): State<Shared>,
    Path(app): Path<String>,
    body: Bytes,
) -> ApiResult<Json<wire::AuthOutcome>> {
    let req: wire::Credentials = parse_body(&body)?;
    let result = blocking(&flare, move |f| {
        let app = AppId::from(app);
        f.registry.require(&app)?;
        f.users.authenticate(&app, &req.username, &req.password)
    })
    .await?;
    Ok(Json(match result {
        AuthResult::Success(id) => wire::AuthOutcome { ok: true, user_id: Some(id) },
        AuthResult::Failure => wire::AuthOutcome { ok: false, user_id: None },
    }))
}

async fn get_user(
    State(flare): State<Shared>,
    Path((app, username)): Path<(String, String)>,
    headers: HeaderMap,
) -> ApiResult<Json<crate::users::PublicUser>> {
    let creds = presented(&headers)?;
    let user = blocking(&flare, move |f| {
        let ctx = authenticate_request(f, &app, creds)?;
        f.users.get_user(&ctx.app, &ctx.principal, &username)
    })
    .await?;
    Ok(Json(user))
}

async fn update_me(
    State(flare): State<Shared>,
    Path(app): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Json<wire::Ack>> {
    let creds = presented(&headers)?;
    let req: wire::UpdateUser = parse_body(&body)?;
    blocking(&flare, move |f| {
        let ctx = authenticate_request(f, &app, creds)?;
        f.users.update_user(&ctx.app, &ctx.principal, req.password.as_deref(), req.attributes.as_ref())
    })
    .await?;
    Ok(Json(wire::Ack::OK))
}

async fn delete_me(
    State(flare): State<Shared>,
    Path(app): Path<String>,
    headers: HeaderMap,
) -> ApiResult<Json<wire::Ack>> {
    let creds = presented(&headers)?;
    blocking(&flare, move |f| {
        let ctx = authenticate_request(f, &app, creds)?;
        f.users.delete_user(&ctx.app, &ctx.principal)
    })
    .await?;
    Ok(Json(wire::Ack::OK))
}

async fn put_record(
    State(flare): State<Shared>,
    Path((app, store)): Path<(String, String)>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Json<wire::RecordCreated>> {
    let kind: StoreKind = store.parse()?;
    let creds = presented(&headers)?;
    let req: wire::PutRecord = parse_body(&body)?;
    let record_id = blocking(&flare, move |f| {
        let ctx = authenticate_request(f, &app, creds)?;
        f.store.put(&ctx.app, &ctx.principal, kind, req.collection, req.fields)
    })
    .await?;
    Ok(Json(wire::RecordCreated { record_id }))
}

/// Builds a query from `fields=a,b&count=N&userID=U&collection=C`.
/// `userID=@name` names the owner by username.
fn parse_query(f: &Flare, app: &AppId, params: &HashMap<String, String>) -> Result<QuerySpec> {
    let fields = params.get("fields").ok_or_else(|| FlareError::validation("fields parameter is required"))?;
    let names = fields
        .split(',')
        .filter(|s| !s.is_empty())
        .map(FieldName::parse)
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut spec = QuerySpec::new(names);
    if let Some(count) = params.get("count") {
        spec.count = Some(count.parse().map_err(|_| FlareError::validation("count must be a non-negative integer"))?);
    }
    if let Some(owner) = params.get("userID") {
        spec.owner_filter = Some(match owner.strip_prefix('@') {
            Some(username) => f
                .users
                .lookup(app, username)?
                .ok_or_else(|| FlareError::NotFound(format!("user {username}")))?,
            None => UserId::new(owner.as_str()),
        });
    }
    if let Some(c) = params.get("collection") {
        spec.collection = Some(Collection::parse(c.as_str())?);
    }
    spec.validate()?;
    Ok(spec)
}

async fn get_records(
    State(flare): State<Shared>,
    Path((app, store)): Path<(String, String)>,
    Query(params): Query<HashMap<String, String>>,
    headers: HeaderMap,
) -> ApiResult<Json<wire::Records>> {
    let kind: StoreKind = store.parse()?;
    let creds = presented(&headers)?;
    let records = blocking(&flare, move |f| {
        let ctx = authenticate_request(f, &app, creds)?;
        let spec = parse_query(f, &ctx.app, &params)?;
        f.store.get(&ctx.app, &ctx.principal, kind, &spec)
    })
    .await?;
    Ok(Json(wire::Records { records }))
}

async fn patch_record(
    State(flare): State<Shared>,
    Path((app, store, record)): Path<(String, String, String)>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Json<wire::Ack>> {
    let kind: StoreKind = store.parse()?;
    let creds = presented(&headers)?;
    let req: wire::PatchRecord = parse_body(&body)?;
    blocking(&flare, move |f| {
        let ctx = authenticate_request(f, &app, creds)?;
        f.store.update(&ctx.app, &ctx.principal, kind, &RecordId::from(record), req.fields)
    })
    .await?;
    Ok(Json(wire::Ack::OK))
}

async fn delete_record(
    State(flare): State<Shared>,
    Path((app, store, record)): Path<(String, String, String)>,
    headers: HeaderMap,
) -> ApiResult<Json<wire::Ack>> {
    let kind: StoreKind = store.parse()?;
    let creds = presented(&headers)?;
    blocking(&flare, move |f| {
        let ctx = authenticate_request(f, &app, creds)?;
        f.store.delete(&ctx.app, &ctx.principal, kind, &RecordId::from(record))
    })
    .await?;
    Ok(Json(wire::Ack::OK))
}

async fn list_groups(
    State(flare): State<Shared>,
    Path(app): Path<String>,
    headers: HeaderMap,
) -> ApiResult<Json<wire::Groups>> {
    let creds = presented(&headers)?;
    let groups = blocking(&flare, move |f| {
        authenticate_request(f, &app, creds)?;
        Ok(f.gateway.list_groups())
    })
    .await?;
    Ok(Json(wire::Groups {
        groups: groups
            .iter()
            .map(|g| wire::GroupInfo { name: g.as_str().into(), implemented: g.implemented() })
            .collect(),
    }))
}

/// Resolves the `{group}` path segment: blogging proceeds, other known
/// groups get the 501 marker, anything else is a 404.
fn blogging_only(group: &str) -> std::result::Result<(), Box<Response>> {
    match group.parse::<ServiceGroup>() {
        Ok(g) if g.implemented() => Ok(()),
        Ok(_) => Err(Box::new((StatusCode::NOT_IMPLEMENTED, Json(wire::NotImplemented::new(group))).into_response())),
        Err(_) => Err(Box::new(ApiError(FlareError::UnknownGroup(group.into())).into_response())),
    }
}

async fn list_providers(
    State(flare): State<Shared>,
    Path((app, group)): Path<(String, String)>,
    headers: HeaderMap,
) -> Response {
    if let Err(r) = blogging_only(&group) {
        return *r;
    }
    let creds = match presented(&headers) {
        Ok(c) => c,
        Err(e) => return ApiError(e).into_response(),
    };
    let group_name = group.clone();
    match blocking(&flare, move |f| {
        authenticate_request(f, &app, creds)?;
        f.gateway.list_providers(&group)
    })
    .await
    {
        Ok(providers) => Json(wire::Providers { group: group_name, providers }).into_response(),
        Err(e) => e.into_response(),
    }
}

/// Shared prologue of the per-handle endpoints.
macro_rules! blogging_call {
    ($flare:expr, $group:expr, $headers:expr, $app:expr, |$f:ident, $ctx:ident| $body:expr) => {{
        if let Err(r) = blogging_only(&$group) {
            return *r;
        }
        let creds = match presented(&$headers) {
            Ok(c) => c,
            Err(e) => return ApiError(e).into_response(),
        };
        let app = $app;
        match blocking(&$flare, move |$f| {
            let $ctx = authenticate_request($f, &app, creds)?;
            $body
        })
        .await
        {
            Ok(v) => Json(v).into_response(),
            Err(e) => e.into_response(),
        }
    }};
}

async fn connect(
    State(flare): State<Shared>,
    Path((app, group, provider)): Path<(String, String, String)>,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let req: wire::Connect = if body.is_empty() {
        wire::Connect::default()
    } else {
        match parse_body(&body) {
            Ok(r) => r,
            Err(e) => return ApiError(e).into_response(),
        }
    };
    blogging_call!(flare, group, headers, app, |f, ctx| {
        let handle_id = f.gateway.connect(&ctx.app, &ctx.principal, &provider, &req.credentials)?;
        Ok(wire::Connected { handle_id })
    })
}

async fn disconnect(
    State(flare): State<Shared>,
    Path((app, group, handle)): Path<(String, String, String)>,
    headers: HeaderMap,
) -> Response {
    blogging_call!(flare, group, headers, app, |f, ctx| {
        f.gateway.disconnect(&ctx.app, &ctx.principal, &handle)?;
        Ok(wire::Ack::OK)
    })
}

async fn create_post(
    State(flare): State<Shared>,
    Path((app, group, handle)): Path<(String, String, String)>,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let req: wire::NewPost = match parse_body(&body) {
        Ok(r) => r,
        Err(e) => return ApiError(e).into_response(),
    };
    blogging_call!(flare, group, headers, app, |f, ctx| {
        let post_ref = f.gateway.create_post(&ctx.app, &ctx.principal, &handle, &req.title, &req.body)?;
        Ok(wire::PostCreated { post_ref })
    })
}

async fn list_posts(
    State(flare): State<Shared>,
    Path((app, group, handle)): Path<(String, String, String)>,
    Query(params): Query<HashMap<String, String>>,
    headers: HeaderMap,
) -> Response {
    let count = match params.get("count").map(|c| c.parse::<usize>()) {
        None => crate::gateway::MAX_POSTS,
        Some(Ok(n)) => n,
        Some(Err(_)) => {
            return ApiError(FlareError::validation("count must be a non-negative integer")).into_response()
        }
    };
    blogging_call!(flare, group, headers, app, |f, ctx| {
        let posts = f.gateway.list_recent_posts(&ctx.app, &ctx.principal, &handle, count)?;
        Ok(wire::Posts { posts })
    })
}

async fn invoke_extra(
    State(flare): State<Shared>,
    Path((app, group, handle, feature)): Path<(String, String, String, String)>,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let req: wire::Extra = if body.is_empty() {
        wire::Extra::default()
    } else {
        match parse_body(&body) {
            Ok(r) => r,
            Err(e) => return ApiError(e).into_response(),
        }
    };
    blogging_call!(flare, group, headers, app, |f, ctx| {
        f.gateway.invoke_extra(&ctx.app, &ctx.principal, &handle, &feature, &req.params)
    })
}
