//! The indexed engine against a literal model of the query contract.

use std::collections::BTreeMap;

use flare_core::{
    AppId, Collection, CoreError, EngineState, FieldEntry, FieldName, Fields, QuerySpec, RecordId,
    Scope, UserId, Visibility,
};
use proptest::prelude::*;

/// The query contract written out directly over a flat list.
#[derive(Default)]
struct Model {
    rows: Vec<Row>,
    seq: u64,
}

#[derive(Clone)]
struct Row {
    id: RecordId,
    app: String,
    owner: Option<String>,
    collection: String,
    fields: BTreeMap<String, (String, bool)>,
    seq: u64,
}

impl Model {
    fn append(&mut self, app: &str, owner: Option<&str>, collection: &str, fields: &[(String, String, bool)]) {
        self.seq += 1;
        self.rows.push(Row {
            id: RecordId::from_seq(self.seq),
            app: app.into(),
            owner: owner.map(Into::into),
            collection: collection.into(),
            fields: fields.iter().map(|(n, v, p)| (n.clone(), (v.clone(), *p))).collect(),
            seq: self.seq,
        });
    }

    fn update(&mut self, app: &str, id: &RecordId, fields: &[(String, String, bool)]) -> bool {
        match self.rows.iter_mut().find(|r| &r.id == id && r.app == app) {
            Some(row) => {
                self.seq += 1;
                for (n, v, p) in fields {
                    row.fields.insert(n.clone(), (v.clone(), *p));
                }
                true
            }
            None => false,
        }
    }

    fn delete(&mut self, app: &str, id: &RecordId) -> bool {
        let before = self.rows.len();
        self.rows.retain(|r| !(&r.id == id && r.app == app));
        if self.rows.len() < before {
            self.seq += 1;
            true
        } else {
            false
        }
    }

    fn query(&self, q: &Query) -> Vec<(RecordId, u64)> {
        let owner = match (&q.owner, &q.filter) {
            (None, _) => None,
            (Some(_), Some(f)) => Some(f.clone()),
            (Some(o), None) => Some(o.clone()),
        };
        let mut hits: Vec<&Row> = self
            .rows
            .iter()
            .filter(|r| r.app == q.app)
            .filter(|r| r.owner == owner)
            .filter(|r| q.collection.as_ref().is_none_or(|c| &r.collection == c))
            .filter(|r| q.fields.iter().any(|f| r.fields.contains_key(f)))
            .collect();
        hits.sort_by_key(|r| std::cmp::Reverse(r.seq));
        let limit = q.count.map_or(100, |c| (c as usize).min(100));
        hits.into_iter().take(limit).map(|r| (r.id.clone(), r.seq)).collect()
    }
}

#[derive(Debug, Clone)]
enum Op {
    Append { app: usize, owner: Option<usize>, collection: usize, fields: Vec<(String, String, bool)> },
    Update { app: usize, pick: usize, fields: Vec<(String, String, bool)> },
    Delete { app: usize, pick: usize },
}

#[derive(Debug, Clone)]
struct Query {
    app: String,
    owner: Option<String>,
    filter: Option<String>,
    collection: Option<String>,
    fields: Vec<String>,
    count: Option<u32>,
}

const APPS: [&str; 2] = ["app-a", "app-b"];
const USERS: [&str; 3] = ["u1", "u2", "u3"];
const COLLECTIONS: [&str; 3] = ["posts", "notes", "misc-1"];
const FIELD_NAMES: [&str; 4] = ["post", "title", "mood", "n_2"];

fn field_set() -> impl Strategy<Value = Vec<(String, String, bool)>> {
    prop::collection::vec(
        (prop::sample::select(&FIELD_NAMES[..]), "[a-z ]{0,6}", any::<bool>())
            .prop_map(|(n, v, p)| (n.to_string(), v, p)),
        1..3,
    )
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        6 => (0..APPS.len(), prop::option::of(0..USERS.len()), 0..COLLECTIONS.len(), field_set())
            .prop_map(|(app, owner, collection, fields)| Op::Append { app, owner, collection, fields }),
        2 => (0..APPS.len(), any::<usize>(), field_set())
            .prop_map(|(app, pick, fields)| Op::Update { app, pick, fields }),
        2 => (0..APPS.len(), any::<usize>()).prop_map(|(app, pick)| Op::Delete { app, pick }),
    ]
}

fn query() -> impl Strategy<Value = Query> {
    (
        prop::sample::select(&APPS[..]),
        prop::option::of(prop::sample::select(&USERS[..])),
        prop::option::of(prop::sample::select(&USERS[..])),
        prop::option::of(prop::sample::select(&COLLECTIONS[..])),
        prop::sample::subsequence(&FIELD_NAMES[..], 1..=FIELD_NAMES.len()),
        prop::option::of(0u32..130),
    )
        .prop_map(|(app, owner, filter, collection, fields, count)| Query {
            app: app.into(),
            owner: owner.map(Into::into),
            filter: filter.map(Into::into),
            collection: collection.map(Into::into),
            fields: fields.into_iter().map(Into::into).collect(),
            count,
        })
}

fn to_fields(fields: &[(String, String, bool)]) -> Fields {
    fields
        .iter()
        .map(|(n, v, p)| {
            let access = if *p { Visibility::Public } else { Visibility::Private };
            (FieldName::parse(n.as_str()).unwrap(), FieldEntry::new(v.as_str(), access))
        })
        .collect()
}

/// Applies `ops` to both sides, checking every write outcome agrees.
fn build(ops: &[Op]) -> (EngineState, Model) {
    let mut state = EngineState::new();
    let mut model = Model::default();
    let mut issued: Vec<RecordId> = Vec::new();
    for op in ops {
        match op {
            Op::Append { app, owner, collection, fields } => {
                let scope = owner.map_or(Scope::Static, |u| Scope::User(UserId::new(USERS[u])));
                let entry = state
                    .prepare_append(
                        AppId::from(APPS[*app]),
                        scope,
                        Collection::parse(COLLECTIONS[*collection]).unwrap(),
                        to_fields(fields),
                        0,
                    )
                    .unwrap();
                let record = state.apply(entry).unwrap().unwrap();
                model.append(APPS[*app], owner.map(|u| USERS[u]), COLLECTIONS[*collection], fields);
                assert_eq!(record.record_id, model.rows.last().unwrap().id);
                issued.push(record.record_id);
            }
            Op::Update { app, pick, fields } if !issued.is_empty() => {
                let id = issued[pick % issued.len()].clone();
                let ok = model.update(APPS[*app], &id, fields);
                match state.prepare_update(AppId::from(APPS[*app]), id, to_fields(fields)) {
                    Ok(entry) => {
                        assert!(ok);
                        state.apply(entry).unwrap();
                    }
                    Err(CoreError::NotFound(_)) => assert!(!ok),
                    Err(e) => panic!("{e}"),
                }
            }
            Op::Delete { app, pick } if !issued.is_empty() => {
                let id = issued[pick % issued.len()].clone();
                let ok = model.delete(APPS[*app], &id);
                match state.prepare_delete(AppId::from(APPS[*app]), id) {
                    Ok(entry) => {
                        assert!(ok);
                        state.apply(entry).unwrap();
                    }
                    Err(CoreError::NotFound(_)) => assert!(!ok),
                    Err(e) => panic!("{e}"),
                }
            }
            _ => {}
        }
    }
    assert_eq!(state.last_seq(), model.seq);
    (state, model)
}

fn engine_query(state: &EngineState, q: &Query, scan: bool) -> Vec<(RecordId, u64)> {
    let scope = q.owner.as_deref().map_or(Scope::Static, |o| Scope::User(UserId::new(o)));
    let mut spec = QuerySpec::new(q.fields.iter().map(|f| FieldName::parse(f.as_str()).unwrap()));
    spec.count = q.count;
    spec.owner_filter = q.filter.as_deref().map(UserId::new);
    spec.collection = q.collection.as_deref().map(|c| Collection::parse(c).unwrap());
    let app = AppId::from(q.app.as_str());
    let out = if scan {
        state.query_by_scan(&app, &scope, &spec)
    } else {
        state.query(&app, &scope, &spec)
    };
    out.unwrap().into_iter().map(|r| (r.record_id, r.stamp.seq)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn indexed_queries_match_the_model(
        ops in prop::collection::vec(op(), 1000..1200),
        queries in prop::collection::vec(query(), 200..220),
    ) {
        let (state, model) = build(&ops);
        for q in &queries {
            let expected = model.query(q);
            let got = engine_query(&state, q, false);
            prop_assert!(got.windows(2).all(|w| w[0].1 > w[1].1), "not strictly descending");
            prop_assert_eq!(&got, &expected, "{:?}", q);
            prop_assert_eq!(engine_query(&state, q, true), expected);
        }
    }

    #[test]
    fn replay_rebuilds_the_same_state(ops in prop::collection::vec(op(), 0..300)) {
        let (state, _) = build(&ops);
        let rebuilt = EngineState::from_parts(state.last_seq(), state.records().cloned()).unwrap();
        prop_assert_eq!(rebuilt, state);
    }
}
