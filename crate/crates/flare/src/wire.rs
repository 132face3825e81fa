//! JSON bodies of the REST binding, shared by the server and the client SDK
//! so both sides serialize byte-identically.

use std::collections::BTreeMap;

use flare_core::web::{BlogPost, ProviderInfo};
use flare_core::{AppId, Collection, Fields, UserId, VisibleRecord};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::users::Attributes;

pub const HEADER_USER: &str = "X-Flare-User";
pub const HEADER_PASSWORD: &str = "X-Flare-Password";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub ok: bool,
}

impl Ack {
    pub const OK: Ack = Ack { ok: true };
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RegisterApp {
    pub dev_key: String,
    pub app_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppCreated {
    #[serde(rename = "appID")]
    pub app_id: AppId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreateUser {
    pub username: String,
    pub password: String,
    #[serde(default)]
    pub attributes: Attributes,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserCreated {
    #[serde(rename = "userID")]
    pub user_id: UserId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Credentials {
    pub username: String,
    pub password: String,
}

/// `{"ok":false}` on failure, `{"ok":true,"userID":...}` on success.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthOutcome {
    pub ok: bool,
    #[serde(rename = "userID", default, skip_serializing_if = "Option::is_none")]
    pub user_id: Option<UserId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateUser {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub password: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attributes: Option<Attributes>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PutRecord {
    pub collection: Collection,
    pub fields: Fields,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchRecord {
    pub fields: Fields,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordCreated {
    #[serde(rename = "recordID")]
    pub record_id: flare_core::RecordId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Records {
    pub records: Vec<VisibleRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupInfo {
    pub name: String,
    pub implemented: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Groups {
    pub groups: Vec<GroupInfo>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Providers {
    pub group: String,
    pub providers: Vec<ProviderInfo>,
}

/// Body of a 501 response for a service group without a contract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NotImplemented {
    pub group: String,
    pub status: String,
}

impl NotImplemented {
    pub const STATUS: &'static str = "not_implemented";

    pub fn new(group: &str) -> Self {
        Self { group: group.into(), status: Self::STATUS.into() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Connect {
    #[serde(default)]
    pub credentials: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Connected {
    #[serde(rename = "handleID")]
    pub handle_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewPost {
    pub title: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostCreated {
    #[serde(rename = "postRef")]
    pub post_ref: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posts {
    pub posts: Vec<BlogPost>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extra {
    #[serde(default)]
    pub params: Map<String, Value>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auth_failure_is_exactly_ok_false() {
        let failure = AuthOutcome { ok: false, user_id: None };
        assert_eq!(serde_json::to_string(&failure).unwrap(), r#"{"ok":false}"#);
        let success = AuthOutcome { ok: true, user_id: Some(UserId::new("u1")) };
        assert_eq!(serde_json::to_string(&success).unwrap(), r#"{"ok":true,"userID":"u1"}"#);
    }

    #[test]
    fn register_app_field_names() {
        let body: RegisterApp =
            serde_json::from_str(r#"{"devKey":"F92KLF5434TR4H","appName":"flitterApp"}"#).unwrap();
        assert_eq!(body.app_name, "flitterApp");
    }

    #[test]
    fn put_record_rejects_bad_names() {
        let bad = r#"{"collection":"posts","fields":{"Bad Name!":{"value":"x"}}}"#;
        assert!(serde_json::from_str::<PutRecord>(bad).is_err());
        let ok = r#"{"collection":"posts","fields":{"post":{"value":"x","access":"public"}}}"#;
        assert_eq!(serde_json::from_str::<PutRecord>(ok).unwrap().fields.len(), 1);
    }
}
