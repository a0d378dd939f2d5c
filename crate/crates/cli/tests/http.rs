use std::path::{Path, PathBuf};
use std::process::Command;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use mvl_cli::server::router;
use mvl_cli::workspace::Workspace;
use serde_json::{json, Value as Json};
use tower::ServiceExt;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn load(name: &str) -> Json {
    serde_json::from_str(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap()
}

/// Session request with every reference inlined.
fn inline_session(name: &str) -> Json {
    let req = load(name);
    json!({
        "source": load(req["source"].as_str().unwrap()),
        "target": load(req["target"].as_str().unwrap()),
        "renaming": load(req["renaming"].as_str().unwrap()),
    })
}

fn app() -> (tempfile::TempDir, Router) {
    let dir = tempfile::tempdir().unwrap();
    let ws = Workspace::open(dir.path()).unwrap();
    (dir, router(ws))
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Json>) -> (StatusCode, String) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(b) => {
            req = req.header("content-type", "application/json");
            Body::from(b.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn call_json(app: &Router, method: Method, uri: &str, body: Option<Json>) -> (StatusCode, Json) {
    let (status, text) = call(app, method, uri, body).await;
    let json = if text.is_empty() { Json::Null } else { serde_json::from_str(&text).unwrap() };
    (status, json)
}

fn cli_run(request: &str, picks: &[&str]) -> String {
    let mut args = vec!["--json", "session", "run", request, "--non-interactive"];
    for p in picks {
        args.extend(["--pick", p]);
    }
    let out = Command::new(env!("CARGO_BIN_EXE_mvl")).args(&args).env_remove("MVL_WORKSPACE").output().unwrap();
    String::from_utf8(out.stdout).unwrap()
}

#[tokio::test]
async fn pinched5_session_is_done_on_creation() {
    let (_dir, app) = app();
    let (status, state) = call_json(&app, Method::POST, "/v1/sessions", Some(inline_session("session_pinched5.json"))).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(state["phase"], "done");
    let id = state["id"].as_str().unwrap();
    let (status, result) = call(&app, Method::GET, &format!("/v1/sessions/{id}/result"), None).await;
    assert_eq!(status, StatusCode::OK);
    let result: Json = serde_json::from_str(&result).unwrap();
    assert_eq!(result["result"]["shape"], "initial");
    assert_eq!(result["result"]["morphism"], false);
    let (status, _) = call(&app, Method::POST, &format!("/v1/sessions/{id}/selection"), Some(json!({"candidate": null}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn declining_every_phase_fails() {
    let (_dir, app) = app();
    let (status, state) = call_json(&app, Method::POST, "/v1/sessions", Some(inline_session("session_a4_b3.json"))).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(state["phase"], "select_renaming");
    let id = state["id"].as_str().unwrap().to_string();

    let (status, page) = call_json(&app, Method::GET, &format!("/v1/sessions/{id}/candidates?limit=5"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(page["morphism_count"], 0);
    assert!(page["total"].as_u64().unwrap() > 0);
    assert!(page["items"].as_array().unwrap().len() <= 5);

    let (status, _) = call(&app, Method::GET, &format!("/v1/sessions/{id}/result"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let phases: Vec<String> = {
        let mut seen = vec![];
        for _ in 0..3 {
            let uri = format!("/v1/sessions/{id}/selection");
            let (status, state) = call_json(&app, Method::POST, &uri, Some(json!({"candidate": null}))).await;
            assert_eq!(status, StatusCode::OK);
            seen.push(state["phase"].as_str().unwrap().to_string());
        }
        seen
    };
    assert_eq!(phases, ["select_table", "select_both", "failed"]);
    let (status, _) = call(&app, Method::POST, &format!("/v1/sessions/{id}/selection"), Some(json!({"candidate": 0}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, result) = call_json(&app, Method::GET, &format!("/v1/sessions/{id}/result"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(result["phase"], "failed");
    assert_eq!(result["result"], Json::Null);
}

#[tokio::test]
async fn selections_out_of_range_conflict() {
    let (_dir, app) = app();
    let (_, state) = call_json(&app, Method::POST, "/v1/sessions", Some(inline_session("session_a4_b3.json"))).await;
    let id = state["id"].as_str().unwrap();
    let uri = format!("/v1/sessions/{id}/selection");
    let (status, err) = call_json(&app, Method::POST, &uri, Some(json!({"candidate": 100000}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["error"]["kind"], "conflict");
    let (status, err) = call_json(&app, Method::POST, &uri, Some(json!({"candidate": "x"}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["error"]["pointer"], "/candidate");
    let (status, _) = call(&app, Method::GET, "/v1/sessions/ses-0000000000000000", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

/// The CLI replay and the service produce the same bytes for the same picks.
#[tokio::test]
async fn cli_replay_matches_service() {
    let flows: [(&str, &[&str], &[Json]); 3] = [
        ("session_pinched5.json", &[], &[]),
        ("session_a4_b3.json", &["none", "none", "none"], &[Json::Null, Json::Null, Json::Null]),
        ("session_a4_b3.json", &["none", "none", "1"], &[Json::Null, Json::Null, json!(1)]),
    ];
    for (request, picks, selections) in flows {
        let (_dir, app) = app();
        let (_, state) = call_json(&app, Method::POST, "/v1/sessions", Some(inline_session(request))).await;
        let id = state["id"].as_str().unwrap();
        for s in selections {
            let uri = format!("/v1/sessions/{id}/selection");
            let (status, _) = call(&app, Method::POST, &uri, Some(json!({ "candidate": s }))).await;
            assert_eq!(status, StatusCode::OK);
        }
        let (status, served) = call(&app, Method::GET, &format!("/v1/sessions/{id}/result"), None).await;
        assert_eq!(status, StatusCode::OK);
        let cli = cli_run(fixture(request).to_str().unwrap(), picks);
        assert_eq!(cli, served, "{request} {picks:?}");
    }
}

#[tokio::test]
async fn entity_crud_and_integrity() {
    let (_dir, app) = app();
    let (status, created) = call_json(&app, Method::POST, "/v1/algebras?name=luk4", Some(load("luk4.json"))).await;
    assert_eq!(status, StatusCode::CREATED);
    let alg = created["id"].as_str().unwrap().to_string();
    let (status, doc) = call_json(&app, Method::GET, &format!("/v1/algebras/{alg}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(doc, load("luk4.json"));
    let (_, by_name) = call_json(&app, Method::GET, "/v1/algebras/luk4", None).await;
    assert_eq!(by_name, doc);
    let (_, list) = call_json(&app, Method::GET, "/v1/algebras", None).await;
    assert_eq!(list["items"], json!([{"id": alg, "name": "luk4"}]));

    let module = json!({"atoms": ["p", "q"], "algebra": alg, "sentences": [{"if": ["!p"], "then": "q", "weight": [2, 3]}]});
    let (status, created) = call_json(&app, Method::POST, "/v1/modules", Some(module)).await;
    assert_eq!(status, StatusCode::CREATED);
    let m = created["id"].as_str().unwrap().to_string();

    let (status, err) = call_json(&app, Method::DELETE, &format!("/v1/algebras/{alg}"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert!(err["error"]["message"].as_str().unwrap().contains(&m));
    let (status, _) = call(&app, Method::GET, &format!("/v1/modules/{alg}"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, Method::DELETE, &format!("/v1/modules/{m}"), None).await.0, StatusCode::NO_CONTENT);
    assert_eq!(call(&app, Method::DELETE, &format!("/v1/algebras/{alg}"), None).await.0, StatusCode::NO_CONTENT);
    assert_eq!(call(&app, Method::GET, &format!("/v1/algebras/{alg}"), None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, Method::GET, "/v1/widgets", None).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn schema_errors_are_422_with_pointer() {
    let (_dir, app) = app();
    let bad = json!({"chain": ["0", "a", "1"], "conj": [[0, 0, 0], [0, 0, 1], [0, 1, 7]]});
    let (status, err) = call_json(&app, Method::POST, "/v1/algebras", Some(bad)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["error"]["pointer"], "/conj/2/2");
    let bad = json!({"atoms": ["p"], "algebra": load("luk4.json"), "sentences": [{"fact": "p", "weight": [3, 1]}]});
    let (status, err) = call_json(&app, Method::POST, "/v1/modules", Some(bad)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["error"]["pointer"], "/sentences/0/weight");
    let mut req = inline_session("session_pinched5.json");
    req["renaming"] = json!([0, 1, 2]);
    let (status, err) = call_json(&app, Method::POST, "/v1/sessions", Some(req)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["error"]["pointer"], "/renaming");
    // Service references never reach the file system.
    let req = json!({"source": "/etc/passwd", "target": ["0", "1"], "renaming": [0, 1]});
    let (status, err) = call_json(&app, Method::POST, "/v1/sessions", Some(req)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["error"]["pointer"], "/source");
    let resp = app
        .clone()
        .oneshot(Request::post("/v1/algebras").header("content-type", "text/plain").body(Body::from("x")).unwrap())
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::UNSUPPORTED_MEDIA_TYPE);
}

#[tokio::test]
async fn intervals_and_validate() {
    let (_dir, app) = app();
    let (_, created) = call_json(&app, Method::POST, "/v1/algebras", Some(load("luk4.json"))).await;
    let id = created["id"].as_str().unwrap();
    let (status, iv) = call_json(&app, Method::GET, &format!("/v1/algebras/{id}/intervals"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(iv["intervals"].as_array().unwrap().len(), 10);
    assert_eq!(iv["hasse"].as_array().unwrap().len(), 12);
    let (status, v) = call_json(&app, Method::POST, "/v1/validate", Some(load("luk4.json"))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["valid"], true);
    let bad = json!({"chain": ["0", "a", "1"], "conj": [[0, 0, 0], [0, 1, 0], [0, 1, 2]]});
    let (_, v) = call_json(&app, Method::POST, "/v1/validate", Some(bad)).await;
    assert_eq!(v["valid"], false);
}

/// Every stored entity parses back to itself: posting it again gives the same id.
#[tokio::test]
async fn stored_documents_round_trip() {
    let (_dir, app) = app();
    let source = json!({"atoms": ["p", "q", "r"], "algebra": load("pinched5.json"), "sentences": [
        {"fact": "p", "weight": ["a3", "1"]},
        {"fact_conj": ["q", "!p"], "weight": [0, 2]},
        {"if": ["p", "!r"], "then": "q", "weight": "1"}
    ]});
    let target = json!({"atoms": ["p", "q", "r"], "algebra": load("min7.json")});
    let bridge = json!({"source": source, "target": target, "renaming": load("pinched_f.json")});
    let (status, created) = call_json(&app, Method::POST, "/v1/bridges", Some(bridge)).await;
    assert_eq!(status, StatusCode::CREATED, "{created}");
    let renaming = json!({"from": created["document"]["source"], "toChain": ["0", "b", "1"], "image": [0, [0, 2], [0, 2], 2, 2]});
    let (status, err) = call_json(&app, Method::POST, "/v1/renamings", Some(renaming)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "`from` must name an algebra: {err}");
    for collection in ["algebras", "renamings", "modules", "bridges"] {
        let (_, list) = call_json(&app, Method::GET, &format!("/v1/{collection}"), None).await;
        let items = list["items"].as_array().unwrap();
        assert!(!items.is_empty(), "{collection}");
        for item in items {
            let id = item["id"].as_str().unwrap();
            let (_, doc) = call_json(&app, Method::GET, &format!("/v1/{collection}/{id}"), None).await;
            let (status, again) = call_json(&app, Method::POST, &format!("/v1/{collection}"), Some(doc.clone())).await;
            assert_eq!(status, StatusCode::CREATED);
            assert_eq!(again["id"], id, "{collection}");
            assert_eq!(again["document"], doc);
        }
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn concurrent_selections_are_serialized() {
    let (_dir, app) = app();
    let (_, state) = call_json(&app, Method::POST, "/v1/sessions", Some(inline_session("session_a4_b3.json"))).await;
    let id = state["id"].as_str().unwrap().to_string();
    let mut handles = vec![];
    for _ in 0..4 {
        let (app, id) = (app.clone(), id.clone());
        handles.push(tokio::spawn(async move {
            call(&app, Method::POST, &format!("/v1/sessions/{id}/selection"), Some(json!({"candidate": null}))).await.0
        }));
    }
    let mut codes = vec![];
    for h in handles {
        codes.push(h.await.unwrap());
    }
    assert_eq!(codes.iter().filter(|c| **c == StatusCode::OK).count(), 3);
    assert_eq!(codes.iter().filter(|c| **c == StatusCode::CONFLICT).count(), 1);
    let (_, result) = call_json(&app, Method::GET, &format!("/v1/sessions/{id}/result"), None).await;
    assert_eq!(result["history"].as_array().unwrap().len(), 3);
}
