//! Persona-fidelity scoring of simulated answers and the model benchmark.
//!
//! Three components, each in [0, 1]:
//! - cognitive: share of marker expectations met, over the profile's
//!   extreme (<= 2 or >= 4) attributes; 1.0 when none are extreme.
//! - steps: 1 - Levenshtein / max length against the nearest sequence of
//!   the profile's strategy family.
//! - semantic: clamped cosine between persona and trace embeddings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{Gateway, GatewayError};
use crate::question::QuestionVersion;
use crate::reasoning::{canonicalize_responses, StepVocabulary, StrategyStep};
use crate::students::profile::{OrdinalAttr, StudentProfile};
use crate::students::{simulate_cohort, RatingKey, SimulationOptions, StudentResponse};

const BUILTIN_MARKERS: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../config/cognitive_markers.json"));
const BUILTIN_FAMILIES: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../config/strategy_families.json"));

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlignmentError {
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("component `{0}` = {1} outside [0, 1]")]
    OutOfRange(&'static str, f64),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

// ------------------------------------------------------------------ weights

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentWeights {
    pub w_cognitive: f64,
    pub w_steps: f64,
    pub w_semantic: f64,
}

impl Default for AlignmentWeights {
    fn default() -> Self {
        Self { w_cognitive: 0.4, w_steps: 0.4, w_semantic: 0.2 }
    }
}

impl AlignmentWeights {
    pub fn validate(&self) -> Result<(), AlignmentError> {
        let ws = [self.w_cognitive, self.w_steps, self.w_semantic];
        if ws.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(AlignmentError::InvalidWeights(format!("{ws:?} has a negative or non-finite weight")));
        }
        let sum: f64 = ws.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(AlignmentError::InvalidWeights(format!("weights sum to {sum}, not 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentScore {
    pub cognitive: f64,
    pub steps: f64,
    pub semantic: f64,
    pub overall: f64,
}

fn in_unit(name: &'static str, x: f64) -> Result<f64, AlignmentError> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(AlignmentError::OutOfRange(name, x))
    }
}

pub fn overall_score(c: f64, s: f64, m: f64, w: &AlignmentWeights) -> Result<f64, AlignmentError> {
    w.validate()?;
    Ok(w.w_cognitive * in_unit("cognitive", c)? + w.w_steps * in_unit("steps", s)? + w.w_semantic * in_unit("semantic", m)?)
}

impl AlignmentScore {
    pub fn new(cognitive: f64, steps: f64, semantic: f64, w: &AlignmentWeights) -> Result<Self, AlignmentError> {
        Ok(Self { cognitive, steps, semantic, overall: overall_score(cognitive, steps, semantic, w)? })
    }
}

// ---------------------------------------------------------------- cognitive

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    High,
    Low,
}

impl Side {
    pub fn of(level: u8) -> Option<Side> {
        match level {
            0..=2 => Some(Side::Low),
            4.. => Some(Side::High),
            _ => None,
        }
    }
}

/// What a trace should show for one extreme attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    AnyOf(Vec<String>),
    NoneOf(Vec<String>),
    MaxLen(usize),
    MinLen(usize),
    RatingAtLeast { key: RatingKey, value: u8 },
}

impl Expectation {
    pub fn holds(&self, labels: &[&str], response: &StudentResponse) -> bool {
        match self {
            Expectation::AnyOf(xs) => labels.iter().any(|l| xs.iter().any(|x| x == l)),
            Expectation::NoneOf(xs) => !labels.iter().any(|l| xs.iter().any(|x| x == l)),
            Expectation::MaxLen(n) => labels.len() <= *n,
            Expectation::MinLen(n) => labels.len() >= *n,
            Expectation::RatingAtLeast { key, value } => response.ratings.get(*key) >= *value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub attribute: OrdinalAttr,
    pub side: Side,
    pub expect: Expectation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerTable {
    pub markers: Vec<Marker>,
}

impl MarkerTable {
    pub fn builtin() -> Self {
        serde_json::from_str(BUILTIN_MARKERS).expect("builtin marker table parses")
    }
}

pub fn cognitive_alignment(table: &MarkerTable, profile: &StudentProfile, steps: &[StrategyStep], response: &StudentResponse) -> f64 {
    let labels: Vec<&str> = steps.iter().map(|s| s.canonical_label.as_str()).collect();
    let (mut evaluated, mut matched) = (0usize, 0usize);
    for m in &table.markers {
        if Side::of(profile.level(m.attribute)) == Some(m.side) {
            evaluated += 1;
            matched += usize::from(m.expect.holds(&labels, response));
        }
    }
    if evaluated == 0 {
        1.0
    } else {
        matched as f64 / evaluated as f64
    }
}

// -------------------------------------------------------------------- steps

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyFamilies {
    pub visual_first: Vec<Vec<String>>,
    pub logic_first: Vec<Vec<String>>,
}

#[derive(Deserialize)]
struct FamiliesFile {
    families: StrategyFamilies,
}

impl StrategyFamilies {
    pub fn builtin() -> Self {
        serde_json::from_str::<FamiliesFile>(BUILTIN_FAMILIES).expect("builtin strategy families parse").families
    }

    pub fn expected_for(&self, profile: &StudentProfile) -> &[Vec<String>] {
        if profile.visual_processing >= profile.logical_reasoning {
            &self.visual_first
        } else {
            &self.logic_first
        }
    }
}

pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// 1 - edit distance / longer length; two empty sequences are identical.
pub fn sequence_similarity<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / longest as f64
}

pub fn steps_alignment(families: &StrategyFamilies, profile: &StudentProfile, steps: &[StrategyStep]) -> f64 {
    let labels: Vec<&str> = steps.iter().map(|s| s.canonical_label.as_str()).collect();
    families
        .expected_for(profile)
        .iter()
        .map(|seq| {
            let seq: Vec<&str> = seq.iter().map(String::as_str).collect();
            sequence_similarity(&labels, &seq)
        })
        .fold(0.0, f64::max)
}

// ----------------------------------------------------------------- semantic

/// max(0, cosine); zero vectors score 0.
pub fn cosine_score(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(0.0, 1.0)
}

pub fn semantic_alignment(gateway: &Gateway, embed_model: &str, persona_text: &str, trace_text: &str) -> Result<f64, AlignmentError> {
    if persona_text.trim().is_empty() {
        return Err(AlignmentError::EmptyInput("persona_text"));
    }
    if trace_text.trim().is_empty() {
        return Err(AlignmentError::EmptyInput("trace_text"));
    }
    let a = gateway.embed(embed_model, persona_text, None)?;
    let b = gateway.embed(embed_model, trace_text, None)?;
    Ok(cosine_score(&a, &b))
}

// ---------------------------------------------------------------- benchmark

/// One simulated answer ready for scoring.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub model_id: &'a str,
    pub round: usize,
    pub question: &'a QuestionVersion,
    pub profile: &'a StudentProfile,
    pub response: &'a StudentResponse,
    pub steps: &'a [StrategyStep],
}

pub trait Scorer: Sync {
    fn score(&self, sample: &Sample<'_>) -> Result<AlignmentScore, String>;
}

/// The three metrics combined with `weights`.
#[derive(Debug, Clone)]
pub struct MetricScorer<'a> {
    pub gateway: &'a Gateway,
    pub embed_model: String,
    pub markers: MarkerTable,
    pub families: StrategyFamilies,
    pub weights: AlignmentWeights,
}

impl<'a> MetricScorer<'a> {
    pub fn new(gateway: &'a Gateway, embed_model: &str) -> Self {
        Self {
            gateway,
            embed_model: embed_model.to_string(),
            markers: MarkerTable::builtin(),
            families: StrategyFamilies::builtin(),
            weights: AlignmentWeights::default(),
        }
    }
}

impl Scorer for MetricScorer<'_> {
    fn score(&self, s: &Sample<'_>) -> Result<AlignmentScore, String> {
        let c = cognitive_alignment(&self.markers, s.profile, s.steps, s.response);
        let st = steps_alignment(&self.families, s.profile, s.steps);
        let m = semantic_alignment(self.gateway, &self.embed_model, &s.profile.persona_text, &s.response.raw_trace.join(" "))
            .map_err(|e| e.to_string())?;
        AlignmentScore::new(c, st, m, &self.weights).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkSpec<'a> {
    pub model_ids: &'a [String],
    pub cohort: &'a [StudentProfile],
    pub questions: &'a [QuestionVersion],
    pub rounds: usize,
    pub seed: u64,
    pub max_steps: usize,
    pub vocabulary: &'a StepVocabulary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_overall: Option<f64>,
    /// Population standard deviation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_overall: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_latency_s: Option<f64>,
    pub component_means: BTreeMap<String, f64>,
    pub n_students: usize,
    pub n_rounds: usize,
    pub n_questions: usize,
    pub n_scored: usize,
    pub n_excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub weights: AlignmentWeights,
    pub models: Vec<ModelReport>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn population_std(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    Some((xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt())
}

pub fn benchmark_models(gateway: &Gateway, scorer: &dyn Scorer, weights: AlignmentWeights, spec: &BenchmarkSpec<'_>) -> Result<BenchmarkReport, AlignmentError> {
    weights.validate()?;
    if spec.model_ids.is_empty() {
        return Err(AlignmentError::EmptyInput("model_ids"));
    }
    if spec.cohort.is_empty() {
        return Err(AlignmentError::EmptyInput("cohort"));
    }
    if spec.questions.is_empty() {
        return Err(AlignmentError::EmptyInput("questions"));
    }
    if spec.rounds == 0 {
        return Err(AlignmentError::EmptyInput("rounds"));
    }
    let parallel = gateway.config().max_parallel;
    let mut models = Vec::new();
    for model_id in spec.model_ids {
        let mut scores: Vec<AlignmentScore> = Vec::new();
        let mut latencies = Vec::new();
        let mut excluded = 0usize;
        for round in 0..spec.rounds {
            for question in spec.questions {
                let opts = SimulationOptions::new(model_id, spec.seed.wrapping_add(round as u64));
                let run = match simulate_cohort(gateway, spec.cohort, question, None, &opts) {
                    Ok(run) => run,
                    Err(_) => {
                        excluded += spec.cohort.len();
                        continue;
                    }
                };
                excluded += run.error_count();
                let responses: Vec<&StudentResponse> = run.responses().collect();
                let canon = match canonicalize_responses(gateway, spec.vocabulary, model_id, opts.seed, &responses, spec.max_steps, parallel) {
                    Ok(c) => c,
                    Err(_) => {
                        excluded += responses.len();
                        continue;
                    }
                };
                for (response, steps) in responses.iter().zip(canon) {
                    let (Ok(steps), Some(profile)) = (steps, run.profile(&response.profile_id)) else {
                        excluded += 1;
                        continue;
                    };
                    let sample = Sample { model_id, round, question, profile, response, steps: &steps };
                    match scorer.score(&sample) {
                        Ok(s) => {
                            scores.push(s);
                            latencies.push(response.latency_ms as f64 / 1000.0);
                        }
                        Err(_) => excluded += 1,
                    }
                }
            }
        }
        let overall: Vec<f64> = scores.iter().map(|s| s.overall).collect();
        let mut component_means = BTreeMap::new();
        if !scores.is_empty() {
            let n = scores.len() as f64;
            component_means.insert("cognitive".into(), scores.iter().map(|s| s.cognitive).sum::<f64>() / n);
            component_means.insert("steps".into(), scores.iter().map(|s| s.steps).sum::<f64>() / n);
            component_means.insert("semantic".into(), scores.iter().map(|s| s.semantic).sum::<f64>() / n);
        }
        models.push(ModelReport {
            model_id: model_id.clone(),
            mean_overall: mean(&overall),
            std_overall: population_std(&overall),
            mean_latency_s: mean(&latencies),
            component_means,
            n_students: spec.cohort.len(),
            n_rounds: spec.rounds,
            n_questions: spec.questions.len(),
            n_scored: scores.len(),
            n_excluded: excluded,
        });
    }
    Ok(BenchmarkReport { weights, models })
}

impl BenchmarkReport {
    /// Plain-text comparison table, one row per model.
    pub fn to_table(&self) -> String {
        let fmt = |x: Option<f64>, p: usize| x.map_or_else(|| "-".to_string(), |v| format!("{v:.p$}"));
        let mut out = format!(
            "{:<20} {:>8} {:>8} {:>10} {:>8} {:>8}\n",
            "model", "overall", "std", "latency_s", "scored", "excluded"
        );
        for m in &self.models {
            out.push_str(&format!(
                "{:<20} {:>8} {:>8} {:>10} {:>8} {:>8}\n",
                m.model_id,
                fmt(m.mean_overall, 4),
                fmt(m.std_overall, 4),
                fmt(m.mean_latency_s, 2),
                m.n_scored,
                m.n_excluded
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::students::profile::Major;
    use crate::students::Ratings;

    fn steps(labels: &[&str]) -> Vec<StrategyStep> {
        labels.iter().map(|l| StrategyStep { canonical_label: l.to_string(), token_count: 1 }).collect()
    }

    fn response(n_steps: usize) -> StudentResponse {
        StudentResponse {
            profile_id: "s01".into(),
            question_version_id: "v1".into(),
            selected_label: "A".into(),
            raw_trace: vec!["x".into(); n_steps],
            ratings: Ratings {
                context_clarity: 3,
                chart_complexity: 3,
                data_difficulty: 3,
                visual_encoding_complexity: 3,
                overall_cognitive_challenge: 3,
                hint_dependency: 3,
            },
            reasoning_token_count: 10,
            correct: true,
            latency_ms: 100,
        }
    }

    #[test]
    fn weighted_sum() {
        let w = AlignmentWeights::default();
        assert!((overall_score(0.7, 0.6, 0.5, &w).unwrap() - 0.62).abs() < 1e-12);
        assert_eq!(overall_score(1.0, 1.0, 1.0, &w).unwrap(), 1.0);
        assert_eq!(overall_score(0.0, 0.0, 0.0, &w).unwrap(), 0.0);
        assert!(overall_score(1.2, 0.0, 0.0, &w).is_err());
        assert!(overall_score(0.5, 0.5, 0.5, &AlignmentWeights { w_cognitive: 0.5, w_steps: 0.5, w_semantic: 0.5 }).is_err());
    }

    #[test]
    fn neutral_profile_scores_one() {
        let p = StudentProfile::uniform("s01", Major::Design, 3);
        assert_eq!(cognitive_alignment(&MarkerTable::builtin(), &p, &steps(&["select_answer"]), &response(1)), 1.0);
    }

    #[test]
    fn half_of_two_markers() {
        let mut p = StudentProfile::uniform("s01", Major::Design, 3);
        p.misleader_awareness = 5;
        p.attention_to_detail = 1;
        let t = steps(&["understand_question", "check_chart_axis", "compare_options", "select_answer"]);
        // axis check satisfies misleader_awareness; four steps break the attention <= 3 length cap.
        assert_eq!(cognitive_alignment(&MarkerTable::builtin(), &p, &t, &response(4)), 0.5);
    }

    #[test]
    fn family_match_and_miss() {
        let f = StrategyFamilies::builtin();
        let p = StudentProfile::uniform("s01", Major::Design, 3);
        let own: Vec<&str> = f.visual_first[0].iter().map(String::as_str).collect();
        assert_eq!(steps_alignment(&f, &p, &steps(&own)), 1.0);
        let foreign = steps(&["read_legend", "check_misleader", "check_scale", "identify_trend"]);
        assert_eq!(steps_alignment(&f, &p, &foreign), 0.0);
    }

    #[test]
    fn levenshtein_basics() {
        assert_eq!(levenshtein(b"kitten", b"sitting"), 3);
        assert_eq!(levenshtein::<u8>(b"", b"abc"), 3);
    }

    #[test]
    fn cosine_cases() {
        assert_eq!(cosine_score(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        assert!((cosine_score(&[1.0, 0.0], &[0.5, 3f64.sqrt() / 2.0]) - 0.5).abs() < 1e-12);
        assert_eq!(cosine_score(&[1.0, 0.0], &[-1.0, 0.0]), 0.0);
        let g = Gateway::mock();
        assert!((semantic_alignment(&g, "embed", "same text", "same text").unwrap() - 1.0).abs() < 1e-12);
    }
}
