//! Persona generation, profile edits, roster import and cohort simulation.

pub mod behavior;
pub mod profile;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::cohort::ClusterAssignment;
use crate::gateway::{prompt_with_context, Gateway, GatewayError, LlmRequest};
use crate::question::QuestionVersion;
use crate::reasoning::CanonicalTrace;
pub use behavior::{BehaviorContract, BehaviorRule};
pub use profile::{EducationYear, Major, OrdinalAttr, StudentProfile};

pub const DEFAULT_COHORT_SIZE: usize = 20;
const PROFILE_BATCH: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StudentError {
    #[error("infeasible constraints: {0}")]
    ConstraintInfeasible(String),
    #[error("selector matches no profile")]
    EmptySelection,
    #[error("invalid edit: {0}")]
    InvalidEdit(String),
    #[error("cohort is empty")]
    EmptyCohort,
    #[error("roster: {0}")]
    Roster(String),
    #[error("question is not valid: {0}")]
    InvalidQuestion(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatingKey {
    ContextClarity,
    ChartComplexity,
    DataDifficulty,
    VisualEncodingComplexity,
    OverallCognitiveChallenge,
    HintDependency,
}

impl RatingKey {
    pub const ALL: [RatingKey; 6] = [
        RatingKey::ContextClarity,
        RatingKey::ChartComplexity,
        RatingKey::DataDifficulty,
        RatingKey::VisualEncodingComplexity,
        RatingKey::OverallCognitiveChallenge,
        RatingKey::HintDependency,
    ];
    /// Feedback on the question text.
    pub const STEM_ROW: [RatingKey; 3] = [
        RatingKey::ContextClarity,
        RatingKey::OverallCognitiveChallenge,
        RatingKey::HintDependency,
    ];
    /// Feedback on the chart.
    pub const CHART_ROW: [RatingKey; 3] = [
        RatingKey::ChartComplexity,
        RatingKey::DataDifficulty,
        RatingKey::VisualEncodingComplexity,
    ];
}

/// Six 1-5 ratings of a question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratings {
    pub context_clarity: u8,
    pub chart_complexity: u8,
    pub data_difficulty: u8,
    pub visual_encoding_complexity: u8,
    pub overall_cognitive_challenge: u8,
    pub hint_dependency: u8,
}

impl Ratings {
    pub fn get(&self, key: RatingKey) -> u8 {
        match key {
            RatingKey::ContextClarity => self.context_clarity,
            RatingKey::ChartComplexity => self.chart_complexity,
            RatingKey::DataDifficulty => self.data_difficulty,
            RatingKey::VisualEncodingComplexity => self.visual_encoding_complexity,
            RatingKey::OverallCognitiveChallenge => self.overall_cognitive_challenge,
            RatingKey::HintDependency => self.hint_dependency,
        }
    }

    pub fn is_valid(&self) -> bool {
        RatingKey::ALL.iter().all(|k| (1..=5).contains(&self.get(*k)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentResponse {
    pub profile_id: String,
    pub question_version_id: String,
    pub selected_label: String,
    pub raw_trace: Vec<String>,
    pub ratings: Ratings,
    pub reasoning_token_count: u64,
    pub correct: bool,
    pub latency_ms: u64,
}

impl StudentResponse {
    pub fn check(&self, option_labels: &[String], correct_label: &str) -> Result<(), String> {
        if !option_labels.contains(&self.selected_label) {
            return Err(format!("selected label `{}` is not an option", self.selected_label));
        }
        if !self.ratings.is_valid() {
            return Err("rating outside 1..=5".into());
        }
        if self.raw_trace.is_empty() {
            return Err("empty reasoning trace".into());
        }
        if self.correct != (self.selected_label == correct_label) {
            return Err("correct flag disagrees with the answer key".into());
        }
        Ok(())
    }
}

/// One simulated student: a response or the error that replaced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSlot {
    pub profile_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<StudentResponse>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<GatewayError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRun {
    pub id: String,
    pub question_version_id: String,
    pub model_id: String,
    pub created_at: String,
    pub seed: u64,
    pub option_labels: Vec<String>,
    pub correct_label: String,
    pub profiles: Vec<StudentProfile>,
    pub slots: Vec<SimulationSlot>,
    #[serde(default)]
    pub traces: Vec<CanonicalTrace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment: Option<ClusterAssignment>,
}

impl SimulationRun {
    pub fn responses(&self) -> impl Iterator<Item = &StudentResponse> {
        self.slots.iter().filter_map(|s| s.response.as_ref())
    }

    pub fn error_count(&self) -> usize {
        self.slots.iter().filter(|s| s.response.is_none()).count()
    }

    /// Correct / successful responses; `None` when nothing succeeded.
    pub fn accuracy(&self) -> Option<f64> {
        let (n, correct) = self
            .responses()
            .fold((0usize, 0usize), |(n, c), r| (n + 1, c + usize::from(r.correct)));
        (n > 0).then(|| correct as f64 / n as f64)
    }

    pub fn profile(&self, id: &str) -> Option<&StudentProfile> {
        self.profiles.iter().find(|p| p.id == id)
    }
}

// ------------------------------------------------------------------ cohorts

fn default_size() -> usize {
    DEFAULT_COHORT_SIZE
}

/// Partial distributions. Shares are fractions of the cohort.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeConstraints {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub major: BTreeMap<Major, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub education_year: BTreeMap<EducationYear, f64>,
    /// Share of students with prior visualization coursework.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_vis_coursework: Option<f64>,
    /// Inclusive `[lo, hi]` bounds per ordinal attribute.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub level_ranges: BTreeMap<OrdinalAttr, [u8; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age_range: Option<[u8; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    #[serde(default)]
    pub description: String,
    #[serde(default = "default_size")]
    pub size: usize,
    #[serde(default)]
    pub attribute_constraints: AttributeConstraints,
    #[serde(default)]
    pub seed: u64,
}

impl Default for CohortSpec {
    fn default() -> Self {
        Self {
            description: String::new(),
            size: DEFAULT_COHORT_SIZE,
            attribute_constraints: AttributeConstraints::default(),
            seed: 0,
        }
    }
}

fn check_shares<T: std::fmt::Display>(name: &str, shares: &BTreeMap<T, f64>) -> Result<(), StudentError> {
    for (k, v) in shares {
        if !(0.0..=1.0).contains(v) {
            return Err(StudentError::ConstraintInfeasible(format!("{name} share for {k} is {v}")));
        }
    }
    let total: f64 = shares.values().sum();
    if total > 1.0 + 1e-9 {
        return Err(StudentError::ConstraintInfeasible(format!("{name} shares sum to {total}")));
    }
    Ok(())
}

impl CohortSpec {
    pub fn validate(&self) -> Result<(), StudentError> {
        if self.size == 0 {
            return Err(StudentError::ConstraintInfeasible("size must be >= 1".into()));
        }
        let c = &self.attribute_constraints;
        check_shares("major", &c.major)?;
        check_shares("education_year", &c.education_year)?;
        if let Some(p) = c.prior_vis_coursework {
            if !(0.0..=1.0).contains(&p) {
                return Err(StudentError::ConstraintInfeasible(format!("prior_vis_coursework share {p}")));
            }
        }
        for (attr, [lo, hi]) in &c.level_ranges {
            if !(1 <= *lo && lo <= hi && *hi <= 5) {
                return Err(StudentError::ConstraintInfeasible(format!("{attr} range [{lo}, {hi}]")));
            }
        }
        if let Some([lo, hi]) = c.age_range {
            if !(15 <= lo && lo <= hi && hi <= 80) {
                return Err(StudentError::ConstraintInfeasible(format!("age range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

/// Hamilton (largest remainder) apportionment of `total` seats over `shares`,
/// which must sum to 1. Ties in the remainder go to the earlier entry.
pub fn largest_remainder(total: usize, shares: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = shares.iter().map(|s| s * total as f64).collect();
    // The epsilon absorbs float noise such as 0.3 * 10 = 2.9999999999999996.
    let mut seats: Vec<usize> = quotas.iter().map(|q| (q + 1e-9).floor() as usize).collect();
    let assigned: usize = seats.iter().sum();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - seats[a] as f64;
        let rb = quotas[b] - seats[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        seats[i] += 1;
    }
    seats
}

/// Exact per-slot values for a categorical attribute. Listed categories get
/// their largest-remainder counts; the leftover share goes to the unlisted
/// categories (chosen at random), or is spread proportionally if every
/// category is listed.
fn apportion_categories<T: Copy + Ord>(size: usize, all: &[T], shares: &BTreeMap<T, f64>, rng: &mut ChaCha8Rng) -> Option<Vec<T>> {
    if shares.is_empty() {
        return None;
    }
    let listed: Vec<T> = all.iter().copied().filter(|c| shares.contains_key(c)).collect();
    let unlisted: Vec<T> = all.iter().copied().filter(|c| !shares.contains_key(c)).collect();
    let sum: f64 = shares.values().sum();
    let mut weights: Vec<f64> = listed.iter().map(|c| shares[c]).collect();
    if unlisted.is_empty() || sum >= 1.0 - 1e-12 {
        if sum <= 0.0 {
            return None;
        }
        weights.iter_mut().for_each(|w| *w /= sum);
    } else {
        weights.push(1.0 - sum);
    }
    let seats = largest_remainder(size, &weights);
    let mut out = Vec::with_capacity(size);
    for (c, n) in listed.iter().zip(&seats) {
        out.extend(std::iter::repeat_n(*c, *n));
    }
    if let Some(rest) = seats.get(listed.len()) {
        for _ in 0..*rest {
            out.push(*unlisted.choose(rng).expect("unlisted is non-empty"));
        }
    }
    out.shuffle(rng);
    Some(out)
}

fn profile_id(i: usize, size: usize) -> String {
    let width = size.to_string().len().max(2);
    format!("s{:0width$}", i + 1)
}

const PROFILE_SYSTEM: &str = "You design realistic student personas for a data visualization course. \
Each persona has demographics, six learning traits and five visualization knowledge levels, all traits and knowledge on a 1-5 scale. \
Honor every fixed slot value and range exactly; choose the remaining attributes so the cohort matches the description.";

/// Builds `spec.size` personas. Categorical shares are realized exactly;
/// everything else is left to the model within the given ranges.
pub fn generate_profiles(gateway: &Gateway, spec: &CohortSpec, model_id: &str) -> Result<Vec<StudentProfile>, StudentError> {
    spec.validate()?;
    let c = &spec.attribute_constraints;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let majors = apportion_categories(spec.size, Major::ALL, &c.major, &mut rng);
    let years = apportion_categories(spec.size, EducationYear::ALL, &c.education_year, &mut rng);
    let priors = c.prior_vis_coursework.map(|p| {
        let seats = largest_remainder(spec.size, &[p, 1.0 - p]);
        let mut v: Vec<bool> = std::iter::repeat_n(true, seats[0]).chain(std::iter::repeat_n(false, seats[1])).collect();
        v.shuffle(&mut rng);
        v
    });
    let slots: Vec<Value> = (0..spec.size)
        .map(|i| {
            let mut slot = serde_json::Map::new();
            if let Some(m) = &majors {
                slot.insert("major".into(), json!(m[i]));
            }
            if let Some(y) = &years {
                slot.insert("education_year".into(), json!(y[i]));
            }
            if let Some(p) = &priors {
                slot.insert("prior_vis_coursework".into(), json!(p[i]));
            }
            Value::Object(slot)
        })
        .collect();

    let level_ranges: BTreeMap<String, [u8; 2]> = c.level_ranges.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let requests: Vec<LlmRequest> = slots
        .chunks(PROFILE_BATCH)
        .map(|chunk| {
            let ctx = json!({
                "description": spec.description,
                "count": chunk.len(),
                "slots": chunk,
                "level_ranges": level_ranges,
                "age_range": c.age_range,
            });
            let user = prompt_with_context(
                "Create one persona per slot, in slot order. Reply with {\"profiles\": [...]} where each profile lists \
                 age, major, education_year, prior_vis_coursework and the eleven 1-5 levels.",
                &ctx,
            );
            LlmRequest::chat(model_id, "profile_batch", PROFILE_SYSTEM.into(), user).with_seed(Some(spec.seed))
        })
        .collect();

    let batches: Vec<&[Value]> = slots.chunks(PROFILE_BATCH).collect();
    let check = |i: usize, v: &Value| check_profile_batch(v, batches[i], &c.level_ranges, c.age_range);
    let outcomes = gateway.fan_out_checked(&requests, gateway.config().max_parallel, &check)?;

    let mut profiles = Vec::with_capacity(spec.size);
    for outcome in outcomes {
        let response = outcome?;
        for raw in response.payload()["profiles"].as_array().into_iter().flatten() {
            let mut raw = raw.clone();
            raw["id"] = json!(profile_id(profiles.len(), spec.size));
            raw["persona_text"] = json!("");
            let mut p: StudentProfile = serde_json::from_value(raw)
                .map_err(|e| StudentError::Gateway(GatewayError::InvalidRequest(e.to_string())))?;
            p.refresh_persona_text();
            profiles.push(p);
        }
    }
    Ok(profiles)
}

fn check_profile_batch(
    v: &Value,
    slots: &[Value],
    ranges: &BTreeMap<OrdinalAttr, [u8; 2]>,
    age_range: Option<[u8; 2]>,
) -> Result<(), String> {
    let profiles = v["profiles"].as_array().ok_or("profiles missing")?;
    if profiles.len() != slots.len() {
        return Err(format!("expected {} profiles, got {}", slots.len(), profiles.len()));
    }
    for (i, (p, slot)) in profiles.iter().zip(slots).enumerate() {
        for (key, want) in slot.as_object().into_iter().flatten() {
            if &p[key] != want {
                return Err(format!("profile {i}: {key} must be {want}"));
            }
        }
        for (attr, [lo, hi]) in ranges {
            let level = p[attr.as_str()].as_u64().unwrap_or(0);
            if level < *lo as u64 || level > *hi as u64 {
                return Err(format!("profile {i}: {attr} = {level} outside [{lo}, {hi}]"));
            }
        }
        if let Some([lo, hi]) = age_range {
            let age = p["age"].as_u64().unwrap_or(0);
            if age < lo as u64 || age > hi as u64 {
                return Err(format!("profile {i}: age {age} outside [{lo}, {hi}]"));
            }
        }
    }
    Ok(())
}

// -------------------------------------------------------------------- edits

/// Conjunction of filters; an empty selector matches everyone.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Selector {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub major: Option<Major>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub education_year: Option<EducationYear>,
    /// Cluster index in the supplied assignment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster: Option<usize>,
}

impl Selector {
    fn matches(&self, p: &StudentProfile, assignment: Option<&ClusterAssignment>) -> bool {
        self.ids.as_ref().is_none_or(|ids| ids.contains(&p.id))
            && self.major.is_none_or(|m| m == p.major)
            && self.education_year.is_none_or(|y| y == p.education_year)
            && self
                .cluster
                .is_none_or(|c| assignment.and_then(|a| a.labels.get(&p.id)) == Some(&c))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileEdit {
    /// Sets the level; values outside 1..=5 are rejected.
    Set { attribute: OrdinalAttr, value: u8 },
    /// Moves the level by `delta`, clamped to 1..=5.
    Shift { attribute: OrdinalAttr, delta: i8 },
    SetMajor { major: Major },
    SetPriorVisCoursework { value: bool },
}

pub fn update_profiles(
    profiles: &[StudentProfile],
    selector: &Selector,
    edits: &[ProfileEdit],
    assignment: Option<&ClusterAssignment>,
) -> Result<Vec<StudentProfile>, StudentError> {
    for edit in edits {
        if let ProfileEdit::Set { attribute, value } = edit {
            if !(1..=5).contains(value) {
                return Err(StudentError::InvalidEdit(format!("{attribute} = {value} outside 1..=5")));
            }
        }
    }
    if selector.cluster.is_some() && assignment.is_none() {
        return Err(StudentError::InvalidEdit("cluster selector needs a clustering".into()));
    }
    if !profiles.iter().any(|p| selector.matches(p, assignment)) {
        return Err(StudentError::EmptySelection);
    }
    Ok(profiles
        .iter()
        .map(|p| {
            if !selector.matches(p, assignment) {
                return p.clone();
            }
            let mut q = p.clone();
            for edit in edits {
                match *edit {
                    ProfileEdit::Set { attribute, value } => *q.level_mut(attribute) = value,
                    ProfileEdit::Shift { attribute, delta } => {
                        let level = q.level_mut(attribute);
                        *level = (*level as i16 + delta as i16).clamp(1, 5) as u8;
                    }
                    ProfileEdit::SetMajor { major } => q.major = major,
                    ProfileEdit::SetPriorVisCoursework { value } => q.prior_vis_coursework = value,
                }
            }
            q.refresh_persona_text();
            q
        })
        .collect())
}

// ------------------------------------------------------------------- roster

pub const ROSTER_COLUMNS: &[&str] = &[
    "id",
    "age",
    "major",
    "education_year",
    "prior_vis_coursework",
    "logical_reasoning",
    "visual_processing",
    "critical_thinking",
    "working_memory",
    "attention_to_detail",
    "motivation",
    "bar_line_reading",
    "proportion_charts",
    "axis_scale_interpretation",
    "misleader_awareness",
    "data_statistics_literacy",
];

/// Parses a roster CSV with exactly [`ROSTER_COLUMNS`] (any order) plus an
/// optional `persona_text` column.
pub fn import_roster(csv_text: &str) -> Result<Vec<StudentProfile>, StudentError> {
    let err = |m: String| StudentError::Roster(m);
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(csv_text.as_bytes());
    let headers: Vec<String> = reader.headers().map_err(|e| err(e.to_string()))?.iter().map(str::to_string).collect();
    for h in &headers {
        if !ROSTER_COLUMNS.contains(&h.as_str()) && h != "persona_text" {
            return Err(err(format!("unmapped column `{h}`")));
        }
    }
    for c in ROSTER_COLUMNS {
        if !headers.iter().any(|h| h == c) {
            return Err(err(format!("missing column `{c}`")));
        }
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record.map_err(|e| err(format!("row {}: {e}", n + 1)))?;
        let mut obj = serde_json::Map::new();
        for (h, cell) in headers.iter().zip(record.iter()) {
            let value = match h.as_str() {
                "id" | "major" | "education_year" | "persona_text" => json!(cell),
                "prior_vis_coursework" => match cell.to_ascii_lowercase().as_str() {
                    "true" | "yes" | "1" => json!(true),
                    "false" | "no" | "0" => json!(false),
                    other => return Err(err(format!("row {}: prior_vis_coursework `{other}`", n + 1))),
                },
                _ => json!(cell.parse::<u8>().map_err(|_| err(format!("row {}: {h} `{cell}` is not an integer", n + 1)))?),
            };
            obj.insert(h.clone(), value);
        }
        let explicit_text = obj.get("persona_text").and_then(Value::as_str).is_some_and(|t| !t.is_empty());
        obj.entry("persona_text").or_insert(json!(""));
        let mut p: StudentProfile =
            serde_json::from_value(Value::Object(obj)).map_err(|e| err(format!("row {}: {e}", n + 1)))?;
        if !explicit_text {
            p.refresh_persona_text();
        }
        p.validate().map_err(|e| err(format!("row {}: {e}", n + 1)))?;
        if !seen.insert(p.id.clone()) {
            return Err(err(format!("duplicate id `{}`", p.id)));
        }
        out.push(p);
    }
    Ok(out)
}

// --------------------------------------------------------------- simulation

#[derive(Debug, Clone)]
pub struct SimulationOptions {
    pub model_id: String,
    pub seed: u64,
    pub contract: BehaviorContract,
}

impl SimulationOptions {
    pub fn new(model_id: &str, seed: u64) -> Self {
        Self { model_id: model_id.to_string(), seed, contract: BehaviorContract::builtin() }
    }
}

const STUDENT_INSTRUCTIONS: &str = "Answer the multiple-choice question about the chart as this student would. \
Think step by step in the student's own words, one short sentence per step, then pick exactly one option label. \
Finally rate the question from 1 (low) to 5 (high) on context_clarity, chart_complexity, data_difficulty, \
visual_encoding_complexity, overall_cognitive_challenge and hint_dependency. \
Reply with {\"selected_label\": ..., \"reasoning_steps\": [...], \"ratings\": {...}}.";

pub fn student_request(
    profile: &StudentProfile,
    question: &QuestionVersion,
    image: Option<&str>,
    opts: &SimulationOptions,
) -> LlmRequest {
    let dispositions: Vec<&str> = opts.contract.dispositions(profile).map(|r| r.disposition.as_str()).collect();
    let mut system = format!(
        "You are role-playing a student in a data visualization course. Stay in character.\n\nPersona:\n{}",
        profile.persona_text
    );
    if !dispositions.is_empty() {
        system.push_str("\n\nReasoning tendencies:");
        for d in &dispositions {
            system.push_str("\n- ");
            system.push_str(d);
        }
    }
    let mut profile_json = serde_json::to_value(profile).expect("profiles serialize");
    if let Some(obj) = profile_json.as_object_mut() {
        obj.remove("persona_text");
    }
    let ctx = json!({
        "profile": profile_json,
        "question": {
            "stem": question.stem,
            "options": question.options,
        },
        "dispositions": dispositions,
    });
    LlmRequest::chat(&opts.model_id, "student_response", system, prompt_with_context(STUDENT_INSTRUCTIONS, &ctx))
        .with_image(image.map(str::to_string))
        .with_seed(Some(opts.seed))
        .with_metadata("correct_label", json!(question.correct_label))
        .with_metadata("difficulty", json!(question.features.difficulty_target))
        .with_metadata("misleader", json!(question.features.misleader.is_some()))
}

/// One response per profile via a bounded fan-out. Per-student failures
/// become error slots. `id` and `created_at` are left for the caller.
pub fn simulate_cohort(
    gateway: &Gateway,
    profiles: &[StudentProfile],
    question: &QuestionVersion,
    image: Option<&str>,
    opts: &SimulationOptions,
) -> Result<SimulationRun, StudentError> {
    if profiles.is_empty() {
        return Err(StudentError::EmptyCohort);
    }
    let report = crate::question::validate_question(question);
    if !report.ok {
        return Err(StudentError::InvalidQuestion(report.summary()));
    }
    let labels: Vec<String> = question.options.iter().map(|o| o.label.clone()).collect();
    let requests: Vec<LlmRequest> = profiles.iter().map(|p| student_request(p, question, image, opts)).collect();
    let check = |_: usize, v: &Value| {
        let selected = v["selected_label"].as_str().unwrap_or_default();
        if labels.iter().any(|l| l == selected) {
            Ok(())
        } else {
            Err(format!("selected_label `{selected}` must be one of {}", labels.join(", ")))
        }
    };
    let outcomes = gateway.fan_out_checked(&requests, gateway.config().max_parallel, &check)?;
    let slots = profiles
        .iter()
        .zip(outcomes)
        .map(|(p, outcome)| match outcome {
            Ok(resp) => {
                let v = resp.payload();
                let selected = v["selected_label"].as_str().unwrap_or_default().to_string();
                let ratings: Ratings = serde_json::from_value(v["ratings"].clone()).expect("schema-validated ratings");
                SimulationSlot {
                    profile_id: p.id.clone(),
                    response: Some(StudentResponse {
                        profile_id: p.id.clone(),
                        question_version_id: question.id.clone(),
                        correct: selected == question.correct_label,
                        selected_label: selected,
                        raw_trace: v["reasoning_steps"]
                            .as_array()
                            .into_iter()
                            .flatten()
                            .filter_map(Value::as_str)
                            .map(str::to_string)
                            .collect(),
                        ratings,
                        reasoning_token_count: resp.completion_token_count,
                        latency_ms: resp.latency_ms,
                    }),
                    error: None,
                }
            }
            Err(e) => SimulationSlot { profile_id: p.id.clone(), response: None, error: Some(e) },
        })
        .collect();
    Ok(SimulationRun {
        id: String::new(),
        question_version_id: question.id.clone(),
        model_id: opts.model_id.clone(),
        created_at: String::new(),
        seed: opts.seed,
        option_labels: labels,
        correct_label: question.correct_label.clone(),
        profiles: profiles.to_vec(),
        slots,
        traces: Vec::new(),
        assignment: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn largest_remainder_exact_and_rounded() {
        assert_eq!(largest_remainder(10, &[0.5, 0.3, 0.2]), vec![5, 3, 2]);
        assert_eq!(largest_remainder(20, &[0.5, 0.3, 0.2]), vec![10, 6, 4]);
        assert_eq!(largest_remainder(3, &[0.5, 0.5]), vec![2, 1]);
        assert_eq!(largest_remainder(7, &[1.0 / 3.0; 3]).iter().sum::<usize>(), 7);
    }

    #[test]
    fn default_cohort_has_twenty() {
        let spec: CohortSpec = serde_json::from_str("{}").unwrap();
        let profiles = generate_profiles(&Gateway::mock(), &spec, "mock-1").unwrap();
        assert_eq!(profiles.len(), 20);
        assert_eq!(profiles[0].id, "s01");
        assert!(profiles.iter().all(|p| p.validate().is_ok()));
    }

    #[test]
    fn major_shares_realized_exactly() {
        let spec = CohortSpec {
            size: 10,
            attribute_constraints: AttributeConstraints {
                major: BTreeMap::from([(Major::ComputerScience, 0.5), (Major::Design, 0.3), (Major::Business, 0.2)]),
                ..Default::default()
            },
            ..Default::default()
        };
        let ps = generate_profiles(&Gateway::mock(), &spec, "mock-1").unwrap();
        let count = |m| ps.iter().filter(|p| p.major == m).count();
        assert_eq!(
            (count(Major::ComputerScience), count(Major::Design), count(Major::Business)),
            (5, 3, 2)
        );
    }

    #[test]
    fn over_unity_shares_rejected() {
        let spec = CohortSpec {
            attribute_constraints: AttributeConstraints {
                major: BTreeMap::from([(Major::ComputerScience, 0.7), (Major::Design, 0.5)]),
                ..Default::default()
            },
            ..Default::default()
        };
        assert!(matches!(
            generate_profiles(&Gateway::mock(), &spec, "m"),
            Err(StudentError::ConstraintInfeasible(_))
        ));
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = CohortSpec { seed: 11, ..Default::default() };
        let a = generate_profiles(&Gateway::mock(), &spec, "m").unwrap();
        let b = generate_profiles(&Gateway::mock(), &spec, "m").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn edits_scope_and_clamp() {
        let ps = vec![
            StudentProfile::uniform("a", Major::ComputerScience, 3),
            StudentProfile::uniform("b", Major::Design, 3),
        ];
        let sel = Selector { major: Some(Major::ComputerScience), ..Default::default() };
        let out = update_profiles(&ps, &sel, &[ProfileEdit::Set { attribute: OrdinalAttr::VisualProcessing, value: 2 }], None).unwrap();
        assert_eq!(out[0].visual_processing, 2);
        assert_eq!(out[1], ps[1]);
        assert_ne!(out[0].persona_text, ps[0].persona_text);

        let bad = update_profiles(&ps, &sel, &[ProfileEdit::Set { attribute: OrdinalAttr::VisualProcessing, value: 6 }], None);
        assert!(matches!(bad, Err(StudentError::InvalidEdit(_))));

        let out = update_profiles(&ps, &Selector::default(), &[ProfileEdit::Shift { attribute: OrdinalAttr::Motivation, delta: 4 }], None).unwrap();
        assert!(out.iter().all(|p| p.motivation == 5));

        let none = Selector { major: Some(Major::Business), ..Default::default() };
        assert_eq!(update_profiles(&ps, &none, &[], None).unwrap_err(), StudentError::EmptySelection);
    }

    #[test]
    fn roster_round_trip_and_unmapped_columns() {
        let header = ROSTER_COLUMNS.join(",");
        let csv = format!("{header}\nu1,21,design,junior,yes,3,4,3,3,2,5,3,3,2,1,4\n");
        let ps = import_roster(&csv).unwrap();
        assert_eq!(ps.len(), 1);
        assert_eq!(ps[0].major, Major::Design);
        assert!(ps[0].prior_vis_coursework);
        assert!(ps[0].validate().is_ok());

        let extra = format!("{header},shoe_size\nu1,21,design,junior,yes,3,4,3,3,2,5,3,3,2,1,4,42\n");
        assert!(matches!(import_roster(&extra), Err(StudentError::Roster(m)) if m.contains("shoe_size")));
        let out_of_range = format!("{header}\nu1,21,design,junior,yes,3,4,3,3,2,5,3,3,2,1,7\n");
        assert!(import_roster(&out_of_range).is_err());
    }
}
