use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use flare_core::web::{word_count, BlogPost};
use serde_json::{json, Map, Value};

use super::{BlogProvider, Connection, Credentials, ExtraResult};
use crate::error::{FlareError, Result};

/// In-memory blogging service. Needs no credentials; an `api_key`, if
/// given, must start with `mock-`.
#[derive(Default)]
pub struct MockBlog {
    posts: Mutex<HashMap<String, Vec<BlogPost>>>,
    next_ref: AtomicU64,
}

impl BlogProvider for MockBlog {
    fn id(&self) -> &'static str {
        "mockblog"
    }

    fn capabilities(&self) -> &'static [&'static str] {
        &["word_count"]
    }

    fn connect(&self, conn: &Connection, credentials: &Credentials) -> Result<()> {
        if credentials.get("api_key").is_some_and(|k| !k.starts_with("mock-")) {
            return Err(FlareError::ProviderAuthFailed);
        }
        self.posts.lock().unwrap().entry(conn.handle_id.clone()).or_default();
        Ok(())
    }

    fn create_post(&self, conn: &Connection, title: &str, body: &str) -> Result<String> {
        let post_ref = format!("mb-{}", self.next_ref.fetch_add(1, Ordering::Relaxed) + 1);
        let published_at = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as i64);
        self.posts.lock().unwrap().entry(conn.handle_id.clone()).or_default().push(BlogPost {
            post_ref: post_ref.clone(),
            title: title.into(),
            body: body.into(),
            published_at,
        });
        Ok(post_ref)
    }

    fn list_recent(&self, conn: &Connection, count: usize) -> Result<Vec<BlogPost>> {
        let posts = self.posts.lock().unwrap();
        Ok(posts
            .get(&conn.handle_id)
            .map(|p| p.iter().rev().take(count).cloned().collect())
            .unwrap_or_default())
    }

    fn invoke_extra(&self, conn: &Connection, feature: &str, params: &Map<String, Value>) -> Result<ExtraResult> {
        match feature {
            "word_count" => {
                let post_ref = params
                    .get("postRef")
                    .and_then(Value::as_str)
                    .ok_or_else(|| FlareError::validation("word_count needs a postRef string"))?;
                let posts = self.posts.lock().unwrap();
                let post = posts
                    .get(&conn.handle_id)
                    .and_then(|p| p.iter().find(|p| p.post_ref == post_ref))
                    .ok_or_else(|| FlareError::NotFound(format!("post {post_ref}")))?;
                let mut out = Map::new();
                out.insert("words".into(), json!(word_count(&post.body)));
                Ok(out)
            }
            other => Err(FlareError::UnsupportedFeature(other.into())),
        }
    }

    fn disconnect(&self, conn: &Connection) {
        self.posts.lock().unwrap().remove(&conn.handle_id);
    }
}
