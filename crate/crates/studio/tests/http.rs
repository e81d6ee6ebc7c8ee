use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use chartquiz_core::gateway::SchemaRegistry;
use chartquiz_core::reasoning::SankeyModel;
use chartquiz_core::studio::{Studio, StudioConfig};
use chartquiz_studio::api::router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/walkthrough").join(name)
}

fn fixture_json(name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap()
}

fn studio(dir: &Path) -> Arc<Studio> {
    Arc::new(
        Studio::open(StudioConfig {
            data_dir: dir.to_path_buf(),
            fixtures: vec![fixture("mock_fixtures.json")],
            ..Default::default()
        })
        .unwrap(),
    )
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap_or(Value::Null) };
    (status, value)
}

/// create, requirements, generate, cohort, run, then the analysis views.
async fn walkthrough(app: &Router) -> Value {
    let (s, project) = call(app, Method::POST, "/projects", Some(json!({"title": "Fruit sales"}))).await;
    assert_eq!(s, StatusCode::CREATED, "{project}");
    let pid = project["id"].as_str().unwrap().to_string();
    let base = format!("/projects/{pid}");

    let (s, features) = call(app, Method::POST, &format!("{base}/requirements"), Some(fixture_json("instructor_input.json"))).await;
    assert_eq!(s, StatusCode::OK, "{features}");
    assert_eq!(features["chart_type"], "bar");
    let (s, version) = call(app, Method::POST, &format!("{base}/questions"), None).await;
    assert_eq!(s, StatusCode::CREATED, "{version}");
    let (s, cohort) = call(app, Method::POST, &format!("{base}/cohort"), Some(fixture_json("cohort_spec.json"))).await;
    assert_eq!(s, StatusCode::OK, "{cohort}");
    assert_eq!(cohort["profiles"].as_array().unwrap().len(), 20);
    let (s, run) = call(app, Method::POST, &format!("{base}/runs"), Some(json!({"version_id": version["id"]}))).await;
    assert_eq!(s, StatusCode::CREATED, "{run}");
    let rid = run["id"].as_str().unwrap();

    let (s, sankey) = call(app, Method::GET, &format!("{base}/runs/{rid}/sankey"), None).await;
    assert_eq!(s, StatusCode::OK, "{sankey}");
    let model: SankeyModel = serde_json::from_value(sankey.clone()).unwrap();
    assert!(model.conserves());
    assert_eq!(model.total_responses, 20);
    for view in ["distribution", "strategies?k=3", "versions/compare"] {
        let (s, body) = call(app, Method::GET, &format!("{base}/runs/{rid}/{view}"), None).await;
        assert_eq!(s, StatusCode::OK, "{view}: {body}");
    }
    sankey
}

#[tokio::test]
async fn scripted_walkthrough_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(studio(dir.path()));
    let sankey = walkthrough(&app).await;
    SchemaRegistry::builtin().validate("sankey_model", &sankey).unwrap();

    let (s, v2) = call(&app, Method::POST, "/projects/p1/questions/v1/revise", Some(json!({"prompt": "Add a hint"}))).await;
    assert_eq!(s, StatusCode::CREATED, "{v2}");
    assert_eq!(v2["parent_id"], "v1");
    let (s, checked) = call(&app, Method::PUT, "/projects/p1/questions/v2/checked", Some(json!({"checked": true}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(checked["checked"], true);
    let edit = json!({"selector": {"cluster": 0}, "edits": [{"op": "shift", "attribute": "motivation", "delta": 1}]});
    let (s, cohort) = call(&app, Method::PATCH, "/projects/p1/cohort", Some(edit)).await;
    assert_eq!(s, StatusCode::OK, "{cohort}");
    let (s, r2) = call(&app, Method::POST, "/projects/p1/runs", Some(json!({"version_id": "v2"}))).await;
    assert_eq!(s, StatusCode::CREATED, "{r2}");
    let (s, stats) = call(&app, Method::GET, "/projects/p1/runs/r2/versions/compare", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(stats["entries"].as_array().unwrap().len(), 2);
    assert_eq!(stats["entries"][1]["previous"]["version_id"], "v1");
    let (s, rel) = call(&app, Method::GET, "/projects/p1/reliability", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!((rel["gen_count"].as_u64(), rel["rev_count"].as_u64()), (Some(1), Some(1)));
}

#[tokio::test]
async fn identical_walkthroughs_persist_identical_trees() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (sa, sb) = (studio(a.path()), studio(b.path()));
    walkthrough(&router(Arc::clone(&sa))).await;
    walkthrough(&router(Arc::clone(&sb))).await;
    assert_eq!(sa.store().snapshot("projects").unwrap(), sb.store().snapshot("projects").unwrap());
}

#[tokio::test]
async fn unknown_version_is_a_404_problem() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(studio(dir.path()));
    call(&app, Method::POST, "/projects", Some(json!({"title": "Empty"}))).await;
    let (s, problem) = call(&app, Method::POST, "/projects/p1/questions/v9/revise", Some(json!({"prompt": "shorter"}))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(problem["code"], "UnknownVersion");
    assert_eq!(problem["status"], 404);
    SchemaRegistry::builtin().validate("problem", &problem).unwrap();

    let (s, problem) = call(&app, Method::GET, "/projects/nope/runs/r1/sankey", None).await;
    assert_eq!((s, problem["code"].as_str()), (StatusCode::NOT_FOUND, Some("UnknownProject")));
    let (s, problem) = call(&app, Method::POST, "/projects", Some(json!({"name": "typo"}))).await;
    assert_eq!((s, problem["code"].as_str()), (StatusCode::BAD_REQUEST, Some("InvalidInput")));
    let (s, problem) = call(&app, Method::POST, "/projects/p1/runs", Some(json!({"version_id": "v1"}))).await;
    assert_eq!((s, problem["code"].as_str()), (StatusCode::NOT_FOUND, Some("UnknownVersion")));
}

#[tokio::test]
async fn no_op_revision_conflicts() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(studio(dir.path()));
    walkthrough(&app).await;
    let (s, problem) = call(&app, Method::POST, "/projects/p1/questions/v1/revise", Some(json!({"prompt": "  "}))).await;
    assert_eq!((s, problem["code"].as_str()), (StatusCode::CONFLICT, Some("NoOpRevision")));
}

#[tokio::test]
async fn get_endpoints_do_not_mutate() {
    let dir = tempfile::tempdir().unwrap();
    let s = studio(dir.path());
    let app = router(Arc::clone(&s));
    walkthrough(&app).await;
    let before = s.store().tree_hash("").unwrap();
    for uri in [
        "/healthz",
        "/projects",
        "/projects/p1",
        "/projects/p1/reliability",
        "/projects/p1/cohort",
        "/projects/p1/questions/v1",
        "/projects/p1/questions/v7",
        "/projects/p1/runs/r1",
        "/projects/p1/runs/r1/sankey",
        "/projects/p1/runs/r1/distribution",
        "/projects/p1/runs/r1/strategies",
        "/projects/p1/runs/r1/strategies?k=1",
        "/projects/p1/runs/r1/versions/compare",
        "/projects/p1/runs/r5/sankey",
        "/projects/p9",
    ] {
        call(&app, Method::GET, uri, None).await;
    }
    assert_eq!(s.store().tree_hash("").unwrap(), before);
}

#[tokio::test]
async fn benchmark_endpoint_reports_each_model() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(studio(dir.path()));
    let req = json!({"model_ids": ["mock-1", "mock-2"], "rounds": 1, "cohort": {"size": 3}});
    let (s, report) = call(&app, Method::POST, "/alignment/benchmark", Some(req)).await;
    assert_eq!(s, StatusCode::OK, "{report}");
    assert_eq!(report["models"].as_array().unwrap().len(), 2);
    SchemaRegistry::builtin().validate("benchmark_report", &report).unwrap();
}
