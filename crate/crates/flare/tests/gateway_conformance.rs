//! One blogging suite, run against every built-in provider.

use std::sync::Arc;

use flare::engine::{Durability, Engine, EngineConfig};
use flare::gateway::Credentials;
use flare::password::HashCost;
use flare::{ErrorCode, Flare};
use flare_core::web::ServiceGroup;
use flare_core::{AppId, Principal, UserId};
use serde_json::{json, Map};

const PROVIDERS: [&str; 2] = ["mockblog", "loopback"];

fn open(dir: &std::path::Path) -> Flare {
    let config = EngineConfig::new(dir.join("flare.log")).durability(Durability::Flush);
    Flare::with_engine(Arc::new(Engine::open(config).unwrap()), ["k".to_string()], HashCost::MINIMAL).unwrap()
}

fn app() -> AppId {
    AppId::from("app")
}

fn user(name: &str) -> Principal {
    Principal::User(UserId::new(name))
}

fn code<T: std::fmt::Debug>(r: flare::error::Result<T>) -> ErrorCode {
    r.unwrap_err().code()
}

fn for_each_provider(check: impl Fn(&Flare, &str)) {
    for provider in PROVIDERS {
        let dir = tempfile::tempdir().unwrap();
        check(&open(dir.path()), provider);
    }
}

#[test]
fn creation_returns_distinct_refs() {
    for_each_provider(|f, provider| {
        let h = f.gateway.connect(&app(), &user("alice"), provider, &Credentials::new()).unwrap();
        let a = f.gateway.create_post(&app(), &user("alice"), &h, "t1", "b1").unwrap();
        let b = f.gateway.create_post(&app(), &user("alice"), &h, "t2", "b2").unwrap();
        assert_ne!(a, b, "{provider}");
        let posts = f.gateway.list_recent_posts(&app(), &user("alice"), &h, 10).unwrap();
        assert_eq!(posts.len(), 2, "{provider}");
        assert_eq!((posts[0].post_ref.as_str(), posts[0].title.as_str(), posts[0].body.as_str()), (b.as_str(), "t2", "b2"));
    });
}

#[test]
fn newest_first_and_count_truncation() {
    for_each_provider(|f, provider| {
        let h = f.gateway.connect(&app(), &user("alice"), provider, &Credentials::new()).unwrap();
        for i in 0..15 {
            f.gateway.create_post(&app(), &user("alice"), &h, &format!("t{i}"), "body").unwrap();
        }
        let posts = f.gateway.list_recent_posts(&app(), &user("alice"), &h, 5).unwrap();
        let titles: Vec<_> = posts.iter().map(|p| p.title.as_str()).collect();
        assert_eq!(titles, ["t14", "t13", "t12", "t11", "t10"], "{provider}");
        assert!(posts.windows(2).all(|w| w[0].published_at >= w[1].published_at), "{provider}");
        assert!(f.gateway.list_recent_posts(&app(), &user("alice"), &h, 0).unwrap().is_empty());
        assert_eq!(f.gateway.list_recent_posts(&app(), &user("alice"), &h, 1000).unwrap().len(), 15);
    });
}

#[test]
fn handles_are_isolated() {
    for_each_provider(|f, provider| {
        let h1 = f.gateway.connect(&app(), &user("alice"), provider, &Credentials::new()).unwrap();
        let h2 = f.gateway.connect(&app(), &user("alice"), provider, &Credentials::new()).unwrap();
        let hb = f.gateway.connect(&app(), &user("bob"), provider, &Credentials::new()).unwrap();
        f.gateway.create_post(&app(), &user("alice"), &h1, "one", "x").unwrap();
        f.gateway.create_post(&app(), &user("bob"), &hb, "bob's", "y").unwrap();
        assert!(f.gateway.list_recent_posts(&app(), &user("alice"), &h2, 10).unwrap().is_empty(), "{provider}");
        assert_eq!(f.gateway.list_recent_posts(&app(), &user("alice"), &h1, 10).unwrap().len(), 1);

        // Another user's handle is not usable, whatever the call.
        assert_eq!(code(f.gateway.list_recent_posts(&app(), &user("bob"), &h1, 10)), ErrorCode::NotFound);
        assert_eq!(code(f.gateway.create_post(&app(), &user("bob"), &h1, "x", "y")), ErrorCode::NotFound);
        assert_eq!(code(f.gateway.disconnect(&app(), &user("bob"), &h1)), ErrorCode::NotFound);
        assert_eq!(code(f.gateway.list_recent_posts(&app(), &Principal::Anonymous, &h1, 10)), ErrorCode::Unauthenticated);
        assert_eq!(code(f.gateway.list_recent_posts(&AppId::from("other"), &user("alice"), &h1, 10)), ErrorCode::NotFound);
        assert_eq!(code(f.gateway.list_recent_posts(&app(), &user("alice"), "nope", 10)), ErrorCode::NotFound);
    });
}

#[test]
fn disconnect_revokes_the_handle() {
    for_each_provider(|f, provider| {
        let h = f.gateway.connect(&app(), &user("alice"), provider, &Credentials::new()).unwrap();
        f.gateway.create_post(&app(), &user("alice"), &h, "t", "b").unwrap();
        f.gateway.disconnect(&app(), &user("alice"), &h).unwrap();
        assert_eq!(code(f.gateway.list_recent_posts(&app(), &user("alice"), &h, 10)), ErrorCode::NotFound, "{provider}");
        assert_eq!(code(f.gateway.disconnect(&app(), &user("alice"), &h)), ErrorCode::NotFound);
    });
}

#[test]
fn unadvertised_extras_are_unsupported() {
    for_each_provider(|f, provider| {
        let h = f.gateway.connect(&app(), &user("alice"), provider, &Credentials::new()).unwrap();
        let r = f.gateway.invoke_extra(&app(), &user("alice"), &h, "teleport", &Map::new());
        assert_eq!(code(r), ErrorCode::UnsupportedFeature, "{provider}");
    });
}

#[test]
fn anonymous_and_unknown_provider_connects_fail() {
    for_each_provider(|f, provider| {
        assert_eq!(code(f.gateway.connect(&app(), &Principal::Anonymous, provider, &Credentials::new())), ErrorCode::Unauthenticated);
    });
    let dir = tempfile::tempdir().unwrap();
    let f = open(dir.path());
    assert_eq!(code(f.gateway.connect(&app(), &user("a"), "blogger", &Credentials::new())), ErrorCode::UnknownProvider);
}

#[test]
fn mockblog_word_count_and_credentials() {
    let dir = tempfile::tempdir().unwrap();
    let f = open(dir.path());
    let bad: Credentials = [("api_key".to_string(), "real-key".to_string())].into();
    assert_eq!(code(f.gateway.connect(&app(), &user("a"), "mockblog", &bad)), ErrorCode::ProviderError);
    let good: Credentials = [("api_key".to_string(), "mock-1".to_string())].into();
    let h = f.gateway.connect(&app(), &user("a"), "mockblog", &good).unwrap();
    let post = f.gateway.create_post(&app(), &user("a"), &h, "t", "three small words").unwrap();
    let mut params = Map::new();
    params.insert("postRef".into(), json!(post));
    let out = f.gateway.invoke_extra(&app(), &user("a"), &h, "word_count", &params).unwrap();
    assert_eq!(out.get("words"), Some(&json!(3)));
    assert_eq!(code(f.gateway.invoke_extra(&app(), &user("a"), &h, "word_count", &Map::new())), ErrorCode::ValidationError);
}

#[test]
fn discovery() {
    let dir = tempfile::tempdir().unwrap();
    let f = open(dir.path());
    assert_eq!(f.gateway.list_groups().len(), 9);
    let ids: Vec<_> = f.gateway.list_providers("blogging").unwrap().into_iter().map(|p| p.provider_id).collect();
    assert_eq!(ids, PROVIDERS);
    for g in ServiceGroup::ALL.iter().filter(|g| !g.implemented()) {
        assert!(f.gateway.list_providers(g.as_str()).unwrap().is_empty());
    }
    assert_eq!(code(f.gateway.list_providers("gaming")), ErrorCode::NotFound);
}

#[test]
fn loopback_handles_and_posts_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let h = {
        let f = open(dir.path());
        let h = f.gateway.connect(&app(), &user("alice"), "loopback", &Credentials::new()).unwrap();
        f.gateway.create_post(&app(), &user("alice"), &h, "kept", "b").unwrap();
        h
    };
    let f = open(dir.path());
    let posts = f.gateway.list_recent_posts(&app(), &user("alice"), &h, 10).unwrap();
    assert_eq!(posts.len(), 1);
    assert_eq!(posts[0].title, "kept");
    assert_eq!(code(f.gateway.list_recent_posts(&app(), &user("bob"), &h, 10)), ErrorCode::NotFound);
}

#[test]
fn concurrent_posts_on_one_handle() {
    for_each_provider(|f, provider| {
        let h = f.gateway.connect(&app(), &user("alice"), provider, &Credentials::new()).unwrap();
        std::thread::scope(|s| {
            for t in 0..4 {
                let h = &h;
                s.spawn(move || {
                    for i in 0..10 {
                        f.gateway.create_post(&app(), &user("alice"), h, &format!("{t}-{i}"), "b").unwrap();
                    }
                });
            }
        });
        let posts = f.gateway.list_recent_posts(&app(), &user("alice"), &h, 100).unwrap();
        assert_eq!(posts.len(), 40, "{provider}");
        let mut refs: Vec<_> = posts.iter().map(|p| &p.post_ref).collect();
        refs.sort();
        refs.dedup();
        assert_eq!(refs.len(), 40);
    });
}
