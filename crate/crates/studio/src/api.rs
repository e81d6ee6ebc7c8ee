//! HTTP surface. Every failure is a problem document carrying the
//! machine-readable `code` of the underlying error.
#![allow(clippy::result_large_err)]

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use chartquiz_core::features::{FeatureDeltas, McqFeatureSet};
use chartquiz_core::question::InstructorInput;
use chartquiz_core::reasoning::DEFAULT_TOP_K;
use chartquiz_core::students::CohortSpec;
use chartquiz_core::studio::{BenchmarkRequest, ClusterRequest, CohortEditRequest, Studio, StudioError};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Error body, served as `application/problem+json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    #[serde(rename = "type")]
    pub kind: String,
    pub title: String,
    pub status: u16,
    pub code: String,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<Value>,
}

impl Problem {
    pub fn new(status: u16, code: &str, detail: impl Into<String>) -> Self {
        let title = StatusCode::from_u16(status)
            .ok()
            .and_then(|s| s.canonical_reason())
            .unwrap_or("Error")
            .to_string();
        Self { kind: format!("urn:chartquiz:problem:{code}"), title, status, code: code.to_string(), detail: detail.into(), context: None }
    }

    fn invalid(detail: impl Into<String>) -> Self {
        Self::new(400, "InvalidInput", detail)
    }
}

impl From<StudioError> for Problem {
    fn from(e: StudioError) -> Self {
        Self { context: e.detail(), ..Self::new(e.status(), e.code(), e.to_string()) }
    }
}

impl IntoResponse for Problem {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let body = serde_json::to_vec(&self).unwrap_or_default();
        (status, [(header::CONTENT_TYPE, "application/problem+json")], body).into_response()
    }
}

type Reply<T> = Result<Json<T>, Problem>;
type Created<T> = Result<(StatusCode, Json<T>), Problem>;

/// Parses a JSON body; an empty body reads as `{}`.
fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, Problem> {
    let bytes: &[u8] = if bytes.iter().all(u8::is_ascii_whitespace) { b"{}" } else { bytes };
    serde_json::from_slice(bytes).map_err(|e| Problem::invalid(format!("request body: {e}")))
}

/// Studio calls block on the model provider and the file system.
async fn blocking<T: Send + 'static>(
    studio: &Arc<Studio>,
    f: impl FnOnce(&Studio) -> Result<T, StudioError> + Send + 'static,
) -> Result<T, Problem> {
    let studio = Arc::clone(studio);
    tokio::task::spawn_blocking(move || f(&studio))
        .await
        .map_err(|e| Problem::new(500, "Internal", e.to_string()))?
        .map_err(Problem::from)
}

fn created<T>(v: T) -> (StatusCode, Json<T>) {
    (StatusCode::CREATED, Json(v))
}

pub fn router(studio: Arc<Studio>) -> Router {
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/projects", post(create_project).get(list_projects))
        .route("/projects/{pid}", get(get_project))
        .route("/projects/{pid}/model", put(set_model))
        .route("/projects/{pid}/requirements", post(requirements))
        .route("/projects/{pid}/reliability", get(reliability))
        .route("/projects/{pid}/questions", post(generate))
        .route("/projects/{pid}/questions/{vid}", get(get_version))
        .route("/projects/{pid}/questions/{vid}/revise", post(revise))
        .route("/projects/{pid}/questions/{vid}/checked", put(set_checked))
        .route("/projects/{pid}/cohort", post(generate_cohort).patch(edit_cohort).get(get_cohort))
        .route("/projects/{pid}/cohort/import", post(import_cohort))
        .route("/projects/{pid}/cohort/cluster", post(cluster_cohort))
        .route("/projects/{pid}/runs", post(simulate))
        .route("/projects/{pid}/runs/{rid}", get(get_run))
        .route("/projects/{pid}/runs/{rid}/sankey", get(sankey))
        .route("/projects/{pid}/runs/{rid}/distribution", get(distribution))
        .route("/projects/{pid}/runs/{rid}/strategies", get(strategies))
        .route("/projects/{pid}/runs/{rid}/versions/compare", get(compare))
        .route("/alignment/benchmark", post(benchmark))
        .fallback(|| async { Problem::new(404, "NotFound", "no such endpoint") })
        .with_state(studio)
}

type S = State<Arc<Studio>>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewProject {
    title: String,
    #[serde(default)]
    model_id: Option<String>,
}

async fn create_project(State(s): S, b: Bytes) -> Created<impl Serialize> {
    let req: NewProject = body(&b)?;
    let p = blocking(&s, move |s| s.create_project(&req.title, req.model_id.as_deref())).await?;
    Ok(created(p))
}

async fn list_projects(State(s): S) -> Reply<Vec<String>> {
    blocking(&s, |s| s.list_projects()).await.map(Json)
}

async fn get_project(State(s): S, Path(pid): Path<String>) -> Reply<impl Serialize> {
    blocking(&s, move |s| s.project(&pid)).await.map(Json)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelChoice {
    model_id: String,
}

async fn set_model(State(s): S, Path(pid): Path<String>, b: Bytes) -> Reply<impl Serialize> {
    let req: ModelChoice = body(&b)?;
    blocking(&s, move |s| s.set_model(&pid, &req.model_id)).await.map(Json)
}

async fn requirements(State(s): S, Path(pid): Path<String>, b: Bytes) -> Reply<McqFeatureSet> {
    let input: InstructorInput = body(&b)?;
    blocking(&s, move |s| s.analyze_requirements(&pid, &input)).await.map(Json)
}

async fn reliability(State(s): S, Path(pid): Path<String>) -> Reply<impl Serialize> {
    blocking(&s, move |s| s.reliability(&pid)).await.map(Json)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateRequest {
    #[serde(default)]
    features: Option<McqFeatureSet>,
}

async fn generate(State(s): S, Path(pid): Path<String>, b: Bytes) -> Created<impl Serialize> {
    let req: GenerateRequest = body(&b)?;
    let v = blocking(&s, move |s| s.generate(&pid, req.features)).await?;
    Ok(created(v))
}

async fn get_version(State(s): S, Path((pid, vid)): Path<(String, String)>) -> Reply<impl Serialize> {
    blocking(&s, move |s| s.version(&pid, &vid)).await.map(Json)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReviseRequest {
    #[serde(default)]
    prompt: String,
    #[serde(default)]
    deltas: FeatureDeltas,
}

async fn revise(State(s): S, Path((pid, vid)): Path<(String, String)>, b: Bytes) -> Created<impl Serialize> {
    let req: ReviseRequest = body(&b)?;
    let v = blocking(&s, move |s| s.revise(&pid, &vid, &req.prompt, &req.deltas)).await?;
    Ok(created(v))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckedFlag {
    checked: bool,
}

async fn set_checked(State(s): S, Path((pid, vid)): Path<(String, String)>, b: Bytes) -> Reply<impl Serialize> {
    let req: CheckedFlag = body(&b)?;
    blocking(&s, move |s| s.set_checked(&pid, &vid, req.checked)).await.map(Json)
}

async fn generate_cohort(State(s): S, Path(pid): Path<String>, b: Bytes) -> Reply<impl Serialize> {
    let spec: CohortSpec = body(&b)?;
    blocking(&s, move |s| s.generate_cohort(&pid, &spec)).await.map(Json)
}

async fn edit_cohort(State(s): S, Path(pid): Path<String>, b: Bytes) -> Reply<impl Serialize> {
    let req: CohortEditRequest = body(&b)?;
    blocking(&s, move |s| s.edit_cohort(&pid, &req)).await.map(Json)
}

async fn get_cohort(State(s): S, Path(pid): Path<String>) -> Reply<impl Serialize> {
    blocking(&s, move |s| s.cohort(&pid)).await.map(Json)
}

/// The body is the roster CSV itself.
async fn import_cohort(State(s): S, Path(pid): Path<String>, b: Bytes) -> Reply<impl Serialize> {
    let csv = String::from_utf8(b.to_vec()).map_err(|_| Problem::invalid("roster is not UTF-8"))?;
    blocking(&s, move |s| s.import_cohort(&pid, &csv)).await.map(Json)
}

async fn cluster_cohort(State(s): S, Path(pid): Path<String>, b: Bytes) -> Reply<impl Serialize> {
    let req: ClusterRequest = body(&b)?;
    blocking(&s, move |s| s.cluster_cohort(&pid, &req)).await.map(Json)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RunRequest {
    version_id: String,
}

async fn simulate(State(s): S, Path(pid): Path<String>, b: Bytes) -> Created<impl Serialize> {
    let req: RunRequest = body(&b)?;
    let run = blocking(&s, move |s| s.simulate(&pid, &req.version_id)).await?;
    Ok(created(run))
}

async fn get_run(State(s): S, Path((pid, rid)): Path<(String, String)>) -> Reply<impl Serialize> {
    blocking(&s, move |s| s.run(&pid, &rid)).await.map(Json)
}

async fn sankey(State(s): S, Path((pid, rid)): Path<(String, String)>) -> Reply<impl Serialize> {
    blocking(&s, move |s| s.sankey(&pid, &rid)).await.map(Json)
}

async fn distribution(State(s): S, Path((pid, rid)): Path<(String, String)>) -> Reply<impl Serialize> {
    blocking(&s, move |s| s.distribution(&pid, &rid)).await.map(Json)
}

#[derive(Deserialize)]
struct TopK {
    k: Option<usize>,
}

async fn strategies(State(s): S, Path((pid, rid)): Path<(String, String)>, Query(q): Query<TopK>) -> Reply<impl Serialize> {
    let k = q.k.unwrap_or(DEFAULT_TOP_K);
    blocking(&s, move |s| s.strategies(&pid, &rid, k)).await.map(Json)
}

async fn compare(State(s): S, Path((pid, rid)): Path<(String, String)>) -> Reply<impl Serialize> {
    blocking(&s, move |s| s.compare(&pid, &rid)).await.map(Json)
}

async fn benchmark(State(s): S, b: Bytes) -> Reply<impl Serialize> {
    let req: BenchmarkRequest = body(&b)?;
    blocking(&s, move |s| s.benchmark(&req)).await.map(Json)
}
