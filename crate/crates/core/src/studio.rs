//! The instructor workflow over a [`DocStore`]:
//!
//! ```text
//! projects/<pid>/project.json
//! projects/<pid>/reliability.json
//! projects/<pid>/versions/<vid>.json
//! projects/<pid>/versions/<vid>/{chart.js,data.csv,chart.svg}
//! projects/<pid>/runs/<rid>.json
//! ```
//!
//! Mutations of one project are serialized by a per-project lock. Reads take
//! no lock; atomic renames keep every document whole.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{benchmark_models, AlignmentError, AlignmentWeights, BenchmarkReport, BenchmarkSpec, MetricScorer};
use crate::clock::{Clock, ManualClock, SystemClock};
use crate::cohort::{cluster_traced, summarize_groups, ClusterAssignment, CohortError, DimensionMask, GroupSummary, DEFAULT_K};
use crate::features::{FeatureDeltas, McqFeatureSet};
use crate::gateway::{FixtureTable, Gateway, GatewayConfig, GatewayError, ProviderKind, SchemaRegistry};
use crate::question::{
    reliability_stats, AttemptKind, AttemptRecord, Generated, InstructorInput, QuestionError, QuestionPipeline, QuestionVersion,
    ReliabilityStats,
};
use crate::reasoning::{
    aggregate_sankey, answer_distribution, canonicalize_run, compare_versions, top_strategies, AnswerDistribution, ReasoningError,
    SankeyModel, StepVocabulary, Strategy, VersionStats, DEFAULT_MAX_STEPS,
};
use crate::render::{HttpRenderer, NoRenderer, RenderRequest, Renderer};
use crate::store::{DocStore, StoreError};
use crate::students::{
    generate_profiles, import_roster, simulate_cohort, update_profiles, CohortSpec, ProfileEdit, Selector, SimulationOptions,
    SimulationRun, StudentError, StudentProfile,
};
use crate::templates::{TemplateError, TemplateStore};

// ------------------------------------------------------------------- config

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockKind {
    /// Virtual time; persisted trees are reproducible.
    Manual,
    System,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudioConfig {
    pub data_dir: PathBuf,
    pub model_id: String,
    pub embed_model: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub renderer_url: Option<String>,
    pub clock: ClockKind,
    pub seed: u64,
    pub max_steps: usize,
    /// Extra template bundles ingested after the seed bundle.
    pub template_bundles: Vec<PathBuf>,
    /// Mock fixture tables, merged in order.
    pub fixtures: Vec<PathBuf>,
    pub gateway: GatewayConfig,
}

impl Default for StudioConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("chartquiz-data"),
            model_id: "mock-1".into(),
            embed_model: "mock-embed".into(),
            renderer_url: None,
            clock: ClockKind::Manual,
            seed: 42,
            max_steps: DEFAULT_MAX_STEPS,
            template_bundles: Vec::new(),
            fixtures: Vec::new(),
            gateway: GatewayConfig::default(),
        }
    }
}

impl StudioConfig {
    /// Reads a TOML file (or defaults) and applies `CHARTQUIZ_*` overrides
    /// from the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self, StudioError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| StudioError::Config(format!("{}: {e}", p.display())))?;
                Self::from_toml(&text)?
            }
            None => Self::default(),
        };
        config.apply_env(|k| std::env::var(k).ok())?;
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self, StudioError> {
        toml::from_str(text).map_err(|e| StudioError::Config(e.to_string()))
    }

    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), StudioError> {
        if let Some(v) = lookup("CHARTQUIZ_PROVIDER") {
            self.gateway.provider = match v.as_str() {
                "mock" => ProviderKind::Mock,
                "http_api" | "http" => ProviderKind::HttpApi,
                other => return Err(StudioError::Config(format!("CHARTQUIZ_PROVIDER `{other}`"))),
            };
        }
        if let Some(v) = lookup("CHARTQUIZ_MODEL") {
            self.model_id = v;
        }
        if let Some(v) = lookup("CHARTQUIZ_MAX_PARALLEL") {
            self.gateway.max_parallel =
                v.parse().map_err(|_| StudioError::Config(format!("CHARTQUIZ_MAX_PARALLEL `{v}`")))?;
        }
        if let Some(v) = lookup("CHARTQUIZ_RENDERER_URL") {
            self.renderer_url = (!v.is_empty()).then_some(v);
        }
        if let Some(v) = lookup("CHARTQUIZ_DATA_DIR") {
            self.data_dir = PathBuf::from(v);
        }
        Ok(())
    }
}

// ------------------------------------------------------------------- errors

#[derive(Debug, Error)]
pub enum StudioError {
    #[error("unknown project `{0}`")]
    UnknownProject(String),
    #[error("unknown question version `{0}`")]
    UnknownVersion(String),
    #[error("unknown run `{0}`")]
    UnknownRun(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("project has no cohort yet")]
    NoCohort,
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Question(#[from] QuestionError),
    #[error(transparent)]
    Student(#[from] StudentError),
    #[error(transparent)]
    Cohort(#[from] CohortError),
    #[error(transparent)]
    Reasoning(#[from] ReasoningError),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Store(StoreError),
}

impl StudioError {
    /// Machine-readable code for problem documents.
    pub fn code(&self) -> &'static str {
        match self {
            StudioError::UnknownProject(_) => "UnknownProject",
            StudioError::UnknownVersion(_) => "UnknownVersion",
            StudioError::UnknownRun(_) => "UnknownRun",
            StudioError::InvalidInput(_) => "InvalidInput",
            StudioError::NoCohort => "NoCohort",
            StudioError::Config(_) => "ConfigError",
            StudioError::Question(e) => match e {
                QuestionError::InvalidInput(_) => "InvalidInput",
                QuestionError::InvalidFeatures(_) => "InvalidFeatures",
                QuestionError::ExtractionSchemaViolation(_) => "ExtractionSchemaViolation",
                QuestionError::EmptyStore => "EmptyStore",
                QuestionError::NoMatch(_) => "NoMatch",
                QuestionError::GenerationFailed(_) => "GenerationFailed",
                QuestionError::NoOpRevision => "NoOpRevision",
                QuestionError::UnknownVersion(_) => "UnknownVersion",
                QuestionError::Render { .. } => "RenderFailed",
                QuestionError::Gateway(g) => gateway_code(g),
                QuestionError::NoData => "NoData",
            },
            StudioError::Student(e) => match e {
                StudentError::ConstraintInfeasible(_) => "ConstraintInfeasible",
                StudentError::EmptySelection => "EmptySelection",
                StudentError::InvalidEdit(_) => "InvalidEdit",
                StudentError::EmptyCohort => "EmptyCohort",
                StudentError::Roster(_) => "RosterError",
                StudentError::InvalidQuestion(_) => "InvalidQuestion",
                StudentError::Gateway(g) => gateway_code(g),
            },
            StudioError::Cohort(e) => match e {
                CohortError::KTooLarge { .. } => "KTooLarge",
                _ => "InvalidClustering",
            },
            StudioError::Reasoning(e) => match e {
                ReasoningError::CanonicalizationFailed(_) => "CanonicalizationFailed",
                ReasoningError::AssignmentMismatch(_) => "AssignmentMismatch",
                ReasoningError::NoRuns => "NoRuns",
            },
            StudioError::Alignment(e) => match e {
                AlignmentError::Gateway(g) => gateway_code(g),
                _ => "InvalidInput",
            },
            StudioError::Gateway(g) => gateway_code(g),
            StudioError::Store(_) => "StoreError",
        }
    }

    /// HTTP status for the code.
    pub fn status(&self) -> u16 {
        match self.code() {
            "UnknownProject" | "UnknownVersion" | "UnknownRun" => 404,
            "NoOpRevision" | "NoCohort" | "NoData" | "NoRuns" => 409,
            "GenerationFailed" | "ExtractionSchemaViolation" | "CanonicalizationFailed" | "SchemaViolationExhausted" => 422,
            "RenderFailed" | "ProviderUnavailable" | "ProviderTimeout" => 502,
            "StoreError" | "ConfigError" => 500,
            _ => 400,
        }
    }

    /// Structured detail worth returning to clients, if any.
    pub fn detail(&self) -> Option<serde_json::Value> {
        match self {
            StudioError::Question(QuestionError::GenerationFailed(report)) => serde_json::to_value(report).ok(),
            StudioError::Question(QuestionError::Render { error, partial }) => {
                Some(serde_json::json!({ "render_error": error, "partial": partial }))
            }
            _ => None,
        }
    }
}

fn gateway_code(e: &GatewayError) -> &'static str {
    match e {
        GatewayError::InvalidRequest(_) => "InvalidRequest",
        GatewayError::ProviderUnavailable(_) => "ProviderUnavailable",
        GatewayError::SchemaViolationExhausted { .. } => "SchemaViolationExhausted",
        GatewayError::Timeout => "ProviderTimeout",
    }
}

impl From<StoreError> for StudioError {
    fn from(e: StoreError) -> Self {
        StudioError::Store(e)
    }
}

// ---------------------------------------------------------------- documents

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Project {
    pub id: String,
    pub title: String,
    pub model_id: String,
    pub created_at: String,
    /// Latest analyzed requirements, used when generating without explicit features.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requirements: Option<McqFeatureSet>,
    /// Append-only; a new entry only when features actually change.
    #[serde(default)]
    pub feature_history: Vec<McqFeatureSet>,
    #[serde(default)]
    pub cohort: Vec<StudentProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment: Option<ClusterAssignment>,
    #[serde(default)]
    pub version_ids: Vec<String>,
    #[serde(default)]
    pub run_ids: Vec<String>,
}

impl Project {
    fn push_features(&mut self, f: &McqFeatureSet) {
        if self.feature_history.last() != Some(f) {
            self.feature_history.push(f.clone());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortView {
    pub profiles: Vec<StudentProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment: Option<ClusterAssignment>,
    pub groups: Vec<GroupSummary>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterRequest {
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub mask: Option<DimensionMask>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortEditRequest {
    #[serde(default)]
    pub selector: Selector,
    pub edits: Vec<ProfileEdit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkRequest {
    pub model_ids: Vec<String>,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default)]
    pub cohort: Option<CohortSpec>,
    /// Features of the questions to benchmark on; one bar question when empty.
    #[serde(default)]
    pub question_features: Vec<McqFeatureSet>,
    #[serde(default)]
    pub weights: Option<AlignmentWeights>,
}

fn default_rounds() -> usize {
    1
}

// ------------------------------------------------------------------- studio

pub struct Studio {
    config: StudioConfig,
    store: DocStore,
    gateway: Gateway,
    templates: TemplateStore,
    renderer: Box<dyn Renderer>,
    clock: Arc<dyn Clock>,
    vocabulary: StepVocabulary,
    create_lock: Mutex<()>,
    locks: Mutex<BTreeMap<String, Arc<Mutex<()>>>>,
}

impl std::fmt::Debug for Studio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Studio").field("config", &self.config).finish()
    }
}

fn project_path(pid: &str) -> String {
    format!("projects/{pid}/project.json")
}

fn version_path(pid: &str, vid: &str) -> String {
    format!("projects/{pid}/versions/{vid}.json")
}

fn run_path(pid: &str, rid: &str) -> String {
    format!("projects/{pid}/runs/{rid}.json")
}

fn reliability_path(pid: &str) -> String {
    format!("projects/{pid}/reliability.json")
}

/// Ids are path segments; anything else is treated as unknown.
fn safe_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl Studio {
    pub fn open(config: StudioConfig) -> Result<Self, StudioError> {
        let mut fixtures = FixtureTable::default();
        for path in &config.fixtures {
            let table = FixtureTable::load(path).map_err(|e| StudioError::Config(format!("{}: {e}", path.display())))?;
            fixtures.extend(table);
        }
        let gateway = Gateway::from_config(config.gateway.clone(), Arc::new(SchemaRegistry::builtin()), Some(fixtures))?;
        let renderer: Box<dyn Renderer> = match &config.renderer_url {
            Some(url) => Box::new(HttpRenderer::new(url)),
            None => Box::new(NoRenderer),
        };
        let clock: Arc<dyn Clock> = match config.clock {
            ClockKind::Manual => Arc::new(ManualClock::default()),
            ClockKind::System => Arc::new(SystemClock),
        };
        Self::with_parts(config, gateway, renderer, clock)
    }

    pub fn with_parts(
        config: StudioConfig,
        gateway: Gateway,
        renderer: Box<dyn Renderer>,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, StudioError> {
        let templates = TemplateStore::new();
        let ingest = |dir: &Path| {
            templates.ingest_bundle(dir).map_err(|e: TemplateError| StudioError::Config(format!("{}: {e}", dir.display())))
        };
        ingest(&TemplateStore::seed_bundle_dir())?;
        for bundle in &config.template_bundles {
            ingest(bundle)?;
        }
        Ok(Self {
            store: DocStore::open(&config.data_dir)?,
            config,
            gateway,
            templates,
            renderer,
            clock,
            vocabulary: StepVocabulary::builtin(),
            create_lock: Mutex::new(()),
            locks: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn config(&self) -> &StudioConfig {
        &self.config
    }

    pub fn store(&self) -> &DocStore {
        &self.store
    }

    pub fn gateway(&self) -> &Gateway {
        &self.gateway
    }

    pub fn templates(&self) -> &TemplateStore {
        &self.templates
    }

    fn lock(&self, pid: &str) -> Arc<Mutex<()>> {
        self.locks.lock().expect("lock table").entry(pid.to_string()).or_default().clone()
    }

    fn pipeline<'a>(&'a self, project: &'a Project) -> QuestionPipeline<'a> {
        QuestionPipeline {
            gateway: &self.gateway,
            templates: &self.templates,
            renderer: self.renderer.as_ref(),
            clock: self.clock.as_ref(),
            model_id: &project.model_id,
            seed: Some(self.config.seed),
        }
    }

    // ------------------------------------------------------------- reads

    pub fn list_projects(&self) -> Result<Vec<String>, StudioError> {
        Ok(self.store.list("projects")?)
    }

    pub fn project(&self, pid: &str) -> Result<Project, StudioError> {
        if !safe_id(pid) {
            return Err(StudioError::UnknownProject(pid.into()));
        }
        self.store.read_json(&project_path(pid)).map_err(|e| match e {
            StoreError::NotFound(_) => StudioError::UnknownProject(pid.into()),
            other => other.into(),
        })
    }

    pub fn version(&self, pid: &str, vid: &str) -> Result<QuestionVersion, StudioError> {
        let project = self.project(pid)?;
        if !project.version_ids.iter().any(|v| v == vid) {
            return Err(StudioError::UnknownVersion(vid.into()));
        }
        Ok(self.store.read_json(&version_path(pid, vid))?)
    }

    pub fn run(&self, pid: &str, rid: &str) -> Result<SimulationRun, StudioError> {
        let project = self.project(pid)?;
        if !project.run_ids.iter().any(|r| r == rid) {
            return Err(StudioError::UnknownRun(rid.into()));
        }
        Ok(self.store.read_json(&run_path(pid, rid))?)
    }

    fn attempts(&self, pid: &str) -> Result<Vec<AttemptRecord>, StudioError> {
        match self.store.read_json(&reliability_path(pid)) {
            Ok(v) => Ok(v),
            Err(StoreError::NotFound(_)) => Ok(Vec::new()),
            Err(e) => Err(e.into()),
        }
    }

    pub fn reliability(&self, pid: &str) -> Result<ReliabilityStats, StudioError> {
        self.project(pid)?;
        Ok(reliability_stats(&self.attempts(pid)?)?)
    }

    fn cohort_view(&self, project: &Project) -> Result<CohortView, StudioError> {
        let groups = match &project.assignment {
            Some(a) => summarize_groups(a, &project.cohort)?,
            None => Vec::new(),
        };
        Ok(CohortView { profiles: project.cohort.clone(), assignment: project.assignment.clone(), groups })
    }

    pub fn cohort(&self, pid: &str) -> Result<CohortView, StudioError> {
        self.cohort_view(&self.project(pid)?)
    }

    pub fn sankey(&self, pid: &str, rid: &str) -> Result<SankeyModel, StudioError> {
        let run = self.run(pid, rid)?;
        let a = run.assignment.as_ref().ok_or(StudioError::NoCohort)?;
        Ok(aggregate_sankey(&run, &run.traces, a)?)
    }

    pub fn distribution(&self, pid: &str, rid: &str) -> Result<AnswerDistribution, StudioError> {
        let run = self.run(pid, rid)?;
        let a = run.assignment.as_ref().ok_or(StudioError::NoCohort)?;
        Ok(answer_distribution(&run, a)?)
    }

    pub fn strategies(&self, pid: &str, rid: &str, k: usize) -> Result<Vec<Strategy>, StudioError> {
        if k == 0 {
            return Err(StudioError::InvalidInput("k must be >= 1".into()));
        }
        Ok(top_strategies(&self.run(pid, rid)?.traces, k))
    }

    /// Statistics over the project's runs up to and including `rid`.
    pub fn compare(&self, pid: &str, rid: &str) -> Result<VersionStats, StudioError> {
        let project = self.project(pid)?;
        let end = project
            .run_ids
            .iter()
            .position(|r| r == rid)
            .ok_or_else(|| StudioError::UnknownRun(rid.into()))?;
        let runs = project.run_ids[..=end]
            .iter()
            .map(|r| self.store.read_json::<SimulationRun>(&run_path(pid, r)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(compare_versions(&runs.iter().collect::<Vec<_>>())?)
    }

    // ---------------------------------------------------------- mutations

    pub fn create_project(&self, title: &str, model_id: Option<&str>) -> Result<Project, StudioError> {
        if title.trim().is_empty() {
            return Err(StudioError::InvalidInput("title is empty".into()));
        }
        let _g = self.create_lock.lock().expect("create lock");
        let n = self.list_projects()?.len() + 1;
        let mut id = format!("p{n}");
        let mut bump = n;
        while self.store.exists(&project_path(&id)) {
            bump += 1;
            id = format!("p{bump}");
        }
        self.write_new_project(&id, title, model_id)
    }

    /// Returns project `pid`, creating it (titled by its id) when absent.
    pub fn ensure_project(&self, pid: &str) -> Result<Project, StudioError> {
        if !safe_id(pid) {
            return Err(StudioError::InvalidInput(format!("`{pid}` is not a valid project id")));
        }
        let _g = self.create_lock.lock().expect("create lock");
        if self.store.exists(&project_path(pid)) {
            return self.project(pid);
        }
        self.write_new_project(pid, pid, None)
    }

    fn write_new_project(&self, id: &str, title: &str, model_id: Option<&str>) -> Result<Project, StudioError> {
        let project = Project {
            id: id.to_string(),
            title: title.to_string(),
            model_id: model_id.unwrap_or(&self.config.model_id).to_string(),
            created_at: self.clock.timestamp(),
            requirements: None,
            feature_history: Vec::new(),
            cohort: Vec::new(),
            assignment: None,
            version_ids: Vec::new(),
            run_ids: Vec::new(),
        };
        self.store.write_json(&project_path(id), &project)?;
        Ok(project)
    }

    /// Runs `f` on the project under its lock and persists the result.
    fn mutate<T>(&self, pid: &str, f: impl FnOnce(&mut Project) -> Result<T, StudioError>) -> Result<T, StudioError> {
        let lock = self.lock(pid);
        let _g = lock.lock().expect("project lock");
        let mut project = self.project(pid)?;
        let out = f(&mut project)?;
        self.store.write_json(&project_path(pid), &project)?;
        Ok(out)
    }

    pub fn set_model(&self, pid: &str, model_id: &str) -> Result<Project, StudioError> {
        if model_id.trim().is_empty() {
            return Err(StudioError::InvalidInput("model_id is empty".into()));
        }
        self.mutate(pid, |p| {
            p.model_id = model_id.to_string();
            Ok(p.clone())
        })
    }

    pub fn analyze_requirements(&self, pid: &str, input: &InstructorInput) -> Result<McqFeatureSet, StudioError> {
        self.mutate(pid, |p| {
            let features = self.pipeline(p).analyze_requirements(input)?;
            p.requirements = Some(features.clone());
            Ok(features)
        })
    }

    fn record_attempt(&self, pid: &str, kind: AttemptKind, started: u64, outcome: &Result<Generated, QuestionError>) -> Result<(), StudioError> {
        let auto_pass = match outcome {
            Ok(g) => g.report.auto_pass,
            Err(QuestionError::GenerationFailed(_) | QuestionError::Render { .. } | QuestionError::Gateway(_)) => false,
            // Requests rejected before any model call are not attempts.
            Err(_) => return Ok(()),
        };
        let ended = self.clock.now_ms();
        let mut log = self.attempts(pid)?;
        log.push(AttemptRecord {
            kind,
            version_id: outcome.as_ref().ok().map(|g| g.version.id.clone()),
            duration_s: ended.saturating_sub(started) as f64 / 1000.0,
            auto_pass,
            recorded_at: self.clock.timestamp(),
        });
        self.store.write_json(&reliability_path(pid), &log)?;
        Ok(())
    }

    fn persist_version(&self, pid: &str, g: &Generated) -> Result<(), StudioError> {
        let v = &g.version;
        let dir = format!("projects/{pid}/versions/{}", v.id);
        self.store.write_text(&format!("{dir}/chart.js"), &v.chart_script)?;
        self.store.write_text(&format!("{dir}/data.csv"), &v.chart_csv)?;
        if let Some(r) = &g.render {
            self.store.write_text(&format!("{dir}/chart.svg"), &r.svg)?;
        }
        self.store.write_json(&version_path(pid, &v.id), v)?;
        Ok(())
    }

    /// Generates from `features`, or from the analyzed requirements.
    pub fn generate(&self, pid: &str, features: Option<McqFeatureSet>) -> Result<QuestionVersion, StudioError> {
        self.mutate(pid, |p| {
            let features = features
                .or_else(|| p.requirements.clone())
                .ok_or_else(|| StudioError::InvalidInput("no features given and no analyzed requirements".into()))?;
            let vid = format!("v{}", p.version_ids.len() + 1);
            let started = self.clock.now_ms();
            let outcome = self.pipeline(p).generate_question(&features, &vid);
            self.record_attempt(pid, AttemptKind::Generation, started, &outcome)?;
            let g = outcome?;
            self.persist_version(pid, &g)?;
            p.push_features(&features);
            p.version_ids.push(vid);
            Ok(g.version)
        })
    }

    pub fn revise(&self, pid: &str, vid: &str, prompt: &str, deltas: &FeatureDeltas) -> Result<QuestionVersion, StudioError> {
        self.mutate(pid, |p| {
            if !p.version_ids.iter().any(|v| v == vid) {
                return Err(StudioError::UnknownVersion(vid.into()));
            }
            let prev: QuestionVersion = self.store.read_json(&version_path(pid, vid))?;
            let new_id = format!("v{}", p.version_ids.len() + 1);
            let started = self.clock.now_ms();
            let outcome = self.pipeline(p).revise_question(&prev, prompt, deltas, &new_id);
            self.record_attempt(pid, AttemptKind::Revision, started, &outcome)?;
            let g = outcome?;
            self.persist_version(pid, &g)?;
            p.push_features(&g.version.features);
            p.version_ids.push(new_id);
            Ok(g.version)
        })
    }

    pub fn set_checked(&self, pid: &str, vid: &str, checked: bool) -> Result<QuestionVersion, StudioError> {
        self.mutate(pid, |p| {
            if !p.version_ids.iter().any(|v| v == vid) {
                return Err(StudioError::UnknownVersion(vid.into()));
            }
            let mut v: QuestionVersion = self.store.read_json(&version_path(pid, vid))?;
            v.checked = checked;
            self.store.write_json(&version_path(pid, vid), &v)?;
            Ok(v)
        })
    }

    fn recluster(&self, p: &mut Project, req: &ClusterRequest) -> Result<(), StudioError> {
        let n = p.cohort.len();
        // Small cohorts cannot fill the default number of groups.
        let k = req.k.unwrap_or(DEFAULT_K.min(n));
        let seed = req.seed.unwrap_or(self.config.seed);
        p.assignment = Some(cluster_traced(&p.cohort, k, seed, req.mask.as_ref())?.assignment);
        Ok(())
    }

    pub fn generate_cohort(&self, pid: &str, spec: &CohortSpec) -> Result<CohortView, StudioError> {
        self.mutate(pid, |p| {
            p.cohort = generate_profiles(&self.gateway, spec, &p.model_id)?;
            self.recluster(p, &ClusterRequest { seed: Some(spec.seed), ..Default::default() })?;
            self.cohort_view(p)
        })
    }

    pub fn import_cohort(&self, pid: &str, csv: &str) -> Result<CohortView, StudioError> {
        self.mutate(pid, |p| {
            p.cohort = import_roster(csv)?;
            self.recluster(p, &ClusterRequest::default())?;
            self.cohort_view(p)
        })
    }

    pub fn cluster_cohort(&self, pid: &str, req: &ClusterRequest) -> Result<CohortView, StudioError> {
        self.mutate(pid, |p| {
            if p.cohort.is_empty() {
                return Err(StudioError::NoCohort);
            }
            self.recluster(p, req)?;
            self.cohort_view(p)
        })
    }

    /// Edits keep the current group membership so adjusted groups stay put.
    pub fn edit_cohort(&self, pid: &str, req: &CohortEditRequest) -> Result<CohortView, StudioError> {
        self.mutate(pid, |p| {
            if p.cohort.is_empty() {
                return Err(StudioError::NoCohort);
            }
            p.cohort = update_profiles(&p.cohort, &req.selector, &req.edits, p.assignment.as_ref())?;
            self.cohort_view(p)
        })
    }

    pub fn simulate(&self, pid: &str, vid: &str) -> Result<SimulationRun, StudioError> {
        self.mutate(pid, |p| {
            if !p.version_ids.iter().any(|v| v == vid) {
                return Err(StudioError::UnknownVersion(vid.into()));
            }
            if p.cohort.is_empty() {
                return Err(StudioError::NoCohort);
            }
            if p.assignment.is_none() {
                self.recluster(p, &ClusterRequest::default())?;
            }
            let assignment = p.assignment.clone().expect("clustered above");
            let question: QuestionVersion = self.store.read_json(&version_path(pid, vid))?;
            let image = self
                .renderer
                .render(&RenderRequest::new(&question.chart_script, &question.chart_csv))
                .map_err(|error| QuestionError::Render {
                    error,
                    partial: crate::question::PartialArtifact {
                        chart_script: question.chart_script.clone(),
                        chart_csv: question.chart_csv.clone(),
                    },
                })?
                .map(|r| r.png_base64);
            let rid = format!("r{}", p.run_ids.len() + 1);
            let opts = SimulationOptions::new(&p.model_id, self.config.seed);
            let mut run = simulate_cohort(&self.gateway, &p.cohort, &question, image.as_deref(), &opts)?;
            for resp in run.responses() {
                self.clock.advance(resp.latency_ms);
            }
            run.id = rid.clone();
            run.created_at = self.clock.timestamp();
            run.traces = canonicalize_run(
                &self.gateway,
                &self.vocabulary,
                &run,
                &assignment,
                self.config.max_steps,
                self.gateway.config().max_parallel,
            )?;
            run.assignment = Some(assignment);
            self.store.write_json(&run_path(pid, &rid), &run)?;
            p.run_ids.push(rid);
            Ok(run)
        })
    }

    pub fn benchmark(&self, req: &BenchmarkRequest) -> Result<BenchmarkReport, StudioError> {
        if req.model_ids.is_empty() {
            return Err(StudioError::InvalidInput("model_ids is empty".into()));
        }
        let spec = req.cohort.clone().unwrap_or_default();
        let cohort = generate_profiles(&self.gateway, &spec, &req.model_ids[0])?;
        let features = if req.question_features.is_empty() {
            vec![McqFeatureSet { chart_type: Some(crate::features::ChartType::Bar), ..Default::default() }]
        } else {
            req.question_features.clone()
        };
        let authoring = Project {
            id: "benchmark".into(),
            title: String::new(),
            model_id: req.model_ids[0].clone(),
            created_at: String::new(),
            requirements: None,
            feature_history: Vec::new(),
            cohort: Vec::new(),
            assignment: None,
            version_ids: Vec::new(),
            run_ids: Vec::new(),
        };
        let questions = features
            .iter()
            .enumerate()
            .map(|(i, f)| self.pipeline(&authoring).generate_question(f, &format!("q{}", i + 1)).map(|g| g.version))
            .collect::<Result<Vec<_>, _>>()?;
        let weights = req.weights.unwrap_or_default();
        let mut scorer = MetricScorer::new(&self.gateway, &self.config.embed_model);
        scorer.weights = weights;
        Ok(benchmark_models(
            &self.gateway,
            &scorer,
            weights,
            &BenchmarkSpec {
                model_ids: &req.model_ids,
                cohort: &cohort,
                questions: &questions,
                rounds: req.rounds,
                seed: self.config.seed,
                max_steps: self.config.max_steps,
                vocabulary: &self.vocabulary,
            },
        )?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn studio(dir: &Path) -> Studio {
        Studio::open(StudioConfig { data_dir: dir.to_path_buf(), ..Default::default() }).unwrap()
    }

    #[test]
    fn env_overrides_file() {
        let mut c = StudioConfig::from_toml("model_id = \"a\"\n[gateway]\nmax_parallel = 2\n").unwrap();
        assert_eq!((c.model_id.as_str(), c.gateway.max_parallel), ("a", 2));
        let env = BTreeMap::from([("CHARTQUIZ_MODEL", "b"), ("CHARTQUIZ_MAX_PARALLEL", "3"), ("CHARTQUIZ_PROVIDER", "http_api")]);
        c.apply_env(|k| env.get(k).map(|v| v.to_string())).unwrap();
        assert_eq!(c.model_id, "b");
        assert_eq!(c.gateway.max_parallel, 3);
        assert_eq!(c.gateway.provider, ProviderKind::HttpApi);
        assert!(StudioConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn workflow_and_history() {
        let dir = tempfile::tempdir().unwrap();
        let s = studio(dir.path());
        let p = s.create_project("Truncated axes", None).unwrap();
        assert_eq!(p.id, "p1");
        s.analyze_requirements(&p.id, &InstructorInput::text("A bar chart comparing values")).unwrap();
        let v1 = s.generate(&p.id, None).unwrap();
        assert_eq!(s.project(&p.id).unwrap().feature_history.len(), 1);
        let v2 = s.revise(&p.id, &v1.id, "Make the wording clearer", &FeatureDeltas::default()).unwrap();
        assert_eq!(v2.parent_id.as_deref(), Some("v1"));
        // Same features: history does not grow.
        assert_eq!(s.project(&p.id).unwrap().feature_history.len(), 1);
        let deltas = FeatureDeltas { hint_presence: Some(true), ..Default::default() };
        s.revise(&p.id, &v2.id, "", &deltas).unwrap();
        assert_eq!(s.project(&p.id).unwrap().feature_history.len(), 2);

        assert!(matches!(s.revise(&p.id, "v99", "x", &FeatureDeltas::default()), Err(StudioError::UnknownVersion(_))));
        let view = s.generate_cohort(&p.id, &CohortSpec::default()).unwrap();
        assert_eq!(view.profiles.len(), 20);
        assert_eq!(view.assignment.as_ref().unwrap().k, 4);
        let run = s.simulate(&p.id, &v1.id).unwrap();
        assert_eq!(run.traces.len(), run.responses().count());
        assert!(s.sankey(&p.id, &run.id).unwrap().conserves());
        let stats = s.reliability(&p.id).unwrap();
        assert_eq!((stats.gen_count, stats.rev_count), (1, 2));
        assert!(s.set_checked(&p.id, &v1.id, true).unwrap().checked);
    }

    #[test]
    fn unknown_ids() {
        let dir = tempfile::tempdir().unwrap();
        let s = studio(dir.path());
        assert_eq!(s.project("nope").unwrap_err().code(), "UnknownProject");
        assert_eq!(s.project("../etc").unwrap_err().status(), 404);
    }
}
