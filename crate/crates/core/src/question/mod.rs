//! Question generation, revision, validation and reliability accounting.
//!
//! Generation is two LLM steps over the best-matching template: customize
//! the chart (script + data), then write stem, options and explanation for
//! it. A draft that fails validation gets one corrective regeneration.

mod validate;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::clock::Clock;
use crate::features::{FeatureDeltas, FeatureError, McqFeatureSet};
use crate::gateway::{prompt_with_context, Gateway, GatewayError, LlmRequest, LlmResponse};
use crate::render::{RenderError, RenderOutput, RenderRequest, Renderer};
use crate::templates::{ChartTemplate, TemplateError, TemplateQuery, TemplateStore};
pub use validate::{references_token, validate_draft, Draft, DraftOption, ValidationReport, Violation, ViolationCode};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionOption {
    pub label: String,
    pub text: String,
}

/// One immutable question snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionVersion {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<String>,
    pub features: McqFeatureSet,
    pub stem: String,
    pub options: Vec<QuestionOption>,
    pub correct_label: String,
    pub explanation: String,
    pub chart_script: String,
    pub chart_csv: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart_image_ref: Option<String>,
    pub created_at: String,
    #[serde(default)]
    pub checked: bool,
    pub template_id: String,
}

impl QuestionVersion {
    pub fn draft(&self) -> Draft<'_> {
        Draft {
            stem: &self.stem,
            options: self
                .options
                .iter()
                .map(|o| DraftOption {
                    label: o.label.clone(),
                    text: o.text.clone(),
                    is_correct: o.label == self.correct_label,
                })
                .collect(),
            explanation: &self.explanation,
            chart_script: &self.chart_script,
            chart_csv: &self.chart_csv,
            expected_options: self.features.option_count(),
        }
    }

    pub fn option_labels(&self) -> Vec<String> {
        self.options.iter().map(|o| o.label.clone()).collect()
    }
}

pub fn validate_question(q: &QuestionVersion) -> ValidationReport {
    validate_draft(&q.draft())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InstructorInput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    /// Base64 slide screenshot or sample figure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    #[serde(default)]
    pub feature_overrides: FeatureDeltas,
}

impl InstructorInput {
    pub fn text(text: &str) -> Self {
        Self { text: Some(text.to_string()), ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), QuestionError> {
        let has_text = self.text.as_deref().is_some_and(|t| !t.trim().is_empty());
        let has_image = self.image.as_deref().is_some_and(|i| !i.is_empty());
        if has_text || has_image {
            Ok(())
        } else {
            Err(QuestionError::InvalidInput("input needs text or an image".into()))
        }
    }
}

/// Chart artifacts kept when rendering fails.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialArtifact {
    pub chart_script: String,
    pub chart_csv: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuestionError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    InvalidFeatures(#[from] FeatureError),
    #[error("feature extraction failed: {0}")]
    ExtractionSchemaViolation(GatewayError),
    #[error("template store is empty")]
    EmptyStore,
    #[error("no template matches: {0}")]
    NoMatch(String),
    #[error("generation failed validation: {}", .0.summary())]
    GenerationFailed(ValidationReport),
    #[error("revision changes nothing")]
    NoOpRevision,
    #[error("unknown question version `{0}`")]
    UnknownVersion(String),
    #[error("render failed: {error}")]
    Render { error: RenderError, partial: PartialArtifact },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("no recorded attempts")]
    NoData,
}

impl From<TemplateError> for QuestionError {
    fn from(e: TemplateError) -> Self {
        match e {
            TemplateError::EmptyStore => QuestionError::EmptyStore,
            TemplateError::NoMatch(m) => QuestionError::NoMatch(m),
            other => QuestionError::InvalidInput(other.to_string()),
        }
    }
}

/// Result of a generate or revise call, including what the reliability
/// log needs when it fails.
#[derive(Debug, Clone)]
pub struct Generated {
    pub version: QuestionVersion,
    pub render: Option<RenderOutput>,
    pub report: ValidationReport,
    pub attempts: u32,
}

const EXTRACT_SYSTEM: &str = "You turn an instructor's description of a visualization literacy question into structured requirements. \
Only report features the input actually constrains.";
const EXTRACT_INSTRUCTIONS: &str = "Extract the question requirements. Allowed keys: cognitive_complexity (1-6), context_domain, \
context_richness, difficulty_target, data_complexity, embellishment_level, plausibility (1-5 each), chart_type, color_scheme, \
misleader, distractor_count (1-5), distractor_strategy, knowledge_points (list), hint_presence.";
const CHART_SYSTEM: &str = "You adapt D3.js chart templates. Keep the drawing code working against the CSV columns; \
introduce variation such as different colors or data distributions.";
const CHART_INSTRUCTIONS: &str = "Customize the template chart to satisfy the features. \
Reply with {\"chart_script\": ..., \"csv\": ..., \"notes\": ...}.";
const QA_SYSTEM: &str = "You write multiple-choice visualization literacy questions grounded in a specific chart.";
const QA_INSTRUCTIONS: &str = "Write the question for this chart by filling the QA template. \
Use exactly distractor_count + 1 options labelled A, B, C, ... with exactly one marked is_correct. \
Reply with {\"stem\": ..., \"options\": [{\"label\", \"text\", \"is_correct\"}], \"explanation\": ...}.";
const REVISE_SYSTEM: &str = "You revise multiple-choice visualization literacy questions. \
Update the chart code and CSV data when needed and modify the question content to follow the instructor's request.";
const REVISE_INSTRUCTIONS: &str = "Revise the previous question according to revision_prompt and the updated features. \
When reference_template is present, rebuild the chart from it. Reply with {\"chart_script\", \"csv\", \"stem\", \
\"options\": [{\"label\", \"text\", \"is_correct\"}], \"explanation\", \"change_summary\"}.";

fn with_feedback(instructions: &str, feedback: Option<&str>) -> String {
    match feedback {
        Some(f) => format!("{instructions}\nThe previous draft failed validation ({f}). Fix these problems."),
        None => instructions.to_string(),
    }
}

fn template_context(t: &ChartTemplate) -> Value {
    json!({
        "id": t.id,
        "chart_type": t.chart_type,
        "chart_script": t.chart_script,
        "sample_csv": t.sample_csv,
        "qa_template": t.qa_template,
    })
}

fn str_field(v: &Value, key: &str) -> String {
    v[key].as_str().unwrap_or_default().to_string()
}

fn draft_options(v: &Value) -> Vec<DraftOption> {
    serde_json::from_value(v["options"].clone()).unwrap_or_default()
}

/// Shared handles for one pipeline invocation.
#[derive(Debug, Clone, Copy)]
pub struct QuestionPipeline<'a> {
    pub gateway: &'a Gateway,
    pub templates: &'a TemplateStore,
    pub renderer: &'a dyn Renderer,
    pub clock: &'a dyn Clock,
    pub model_id: &'a str,
    pub seed: Option<u64>,
}

impl QuestionPipeline<'_> {
    fn call(&self, request: LlmRequest) -> Result<LlmResponse, GatewayError> {
        let response = self.gateway.complete(&request.with_seed(self.seed))?;
        self.clock.advance(response.latency_ms);
        Ok(response)
    }

    fn render(&self, script: &str, csv: &str) -> Result<Option<RenderOutput>, QuestionError> {
        self.renderer
            .render(&RenderRequest::new(script, csv))
            .map_err(|error| QuestionError::Render {
                error,
                partial: PartialArtifact { chart_script: script.to_string(), chart_csv: csv.to_string() },
            })
    }

    /// Defaults, overlaid by extracted features, overlaid by explicit overrides.
    pub fn analyze_requirements(&self, input: &InstructorInput) -> Result<McqFeatureSet, QuestionError> {
        input.validate()?;
        let ctx = json!({ "text": input.text.clone().unwrap_or_default() });
        let request = LlmRequest::chat(
            self.model_id,
            "feature_extraction",
            EXTRACT_SYSTEM.into(),
            prompt_with_context(EXTRACT_INSTRUCTIONS, &ctx),
        )
        .with_image(input.image.clone());
        let response = self.call(request).map_err(|e| match e {
            e @ GatewayError::SchemaViolationExhausted { .. } => QuestionError::ExtractionSchemaViolation(e),
            other => QuestionError::Gateway(other),
        })?;
        let extracted: FeatureDeltas = serde_json::from_value(response.payload().clone()).map_err(|e| {
            QuestionError::ExtractionSchemaViolation(GatewayError::SchemaViolationExhausted {
                schema_id: "feature_extraction".into(),
                attempts: response.attempt_count,
                last_error: e.to_string(),
            })
        })?;
        let features = McqFeatureSet::default()
            .with_deltas(&extracted)
            .with_deltas(&input.feature_overrides);
        features.validate()?;
        Ok(features)
    }

    pub fn generate_question(&self, features: &McqFeatureSet, id: &str) -> Result<Generated, QuestionError> {
        features.validate()?;
        let (template, _) = self
            .templates
            .retrieve(&TemplateQuery { features: features.clone(), k: 1 })?
            .into_iter()
            .next()
            .ok_or_else(|| QuestionError::NoMatch("retrieval returned nothing".into()))?;
        let features_json = serde_json::to_value(features).expect("features serialize");

        let mut feedback: Option<String> = None;
        let mut last_report = None;
        for attempt in 1..=2 {
            let ctx = json!({ "template": template_context(&template), "features": features_json });
            let chart = self.call(LlmRequest::chat(
                self.model_id,
                "chart_customization",
                CHART_SYSTEM.into(),
                prompt_with_context(&with_feedback(CHART_INSTRUCTIONS, feedback.as_deref()), &ctx),
            ))?;
            let script = str_field(chart.payload(), "chart_script");
            let csv = str_field(chart.payload(), "csv");
            let rendered = self.render(&script, &csv)?;

            let ctx = json!({
                "template_id": template.id,
                "qa_template": template.qa_template,
                "csv": csv,
                "features": features_json,
            });
            let qa = self.call(
                LlmRequest::chat(
                    self.model_id,
                    "qa_generation",
                    QA_SYSTEM.into(),
                    prompt_with_context(&with_feedback(QA_INSTRUCTIONS, feedback.as_deref()), &ctx),
                )
                .with_image(rendered.as_ref().map(|r| r.png_base64.clone())),
            )?;
            let qa = qa.payload();
            let options = draft_options(qa);
            let stem = str_field(qa, "stem");
            let explanation = str_field(qa, "explanation");
            let report = validate_draft(&Draft {
                stem: &stem,
                options: options.clone(),
                explanation: &explanation,
                chart_script: &script,
                chart_csv: &csv,
                expected_options: features.option_count(),
            });
            if report.ok {
                let correct_label = options.iter().find(|o| o.is_correct).map(|o| o.label.clone()).unwrap_or_default();
                return Ok(Generated {
                    version: QuestionVersion {
                        id: id.to_string(),
                        parent_id: None,
                        features: features.clone(),
                        stem,
                        options: options.into_iter().map(|o| QuestionOption { label: o.label, text: o.text }).collect(),
                        correct_label,
                        explanation,
                        chart_script: script,
                        chart_csv: csv,
                        chart_image_ref: rendered.as_ref().map(RenderOutput::image_ref),
                        created_at: self.clock.timestamp(),
                        checked: false,
                        template_id: template.id.clone(),
                    },
                    render: rendered,
                    report,
                    attempts: attempt,
                });
            }
            feedback = Some(report.summary());
            last_report = Some(report);
        }
        Err(QuestionError::GenerationFailed(last_report.expect("two attempts ran")))
    }

    pub fn revise_question(
        &self,
        prev: &QuestionVersion,
        revision_prompt: &str,
        deltas: &FeatureDeltas,
        id: &str,
    ) -> Result<Generated, QuestionError> {
        let features = prev.features.with_deltas(deltas);
        features.validate()?;
        let changed = prev.features.changed_fields(&features);
        if revision_prompt.trim().is_empty() && changed.is_empty() {
            return Err(QuestionError::NoOpRevision);
        }
        let reference = if changed.contains(&"chart_type") {
            let (t, _) = self
                .templates
                .retrieve(&TemplateQuery { features: features.clone(), k: 1 })?
                .into_iter()
                .next()
                .ok_or_else(|| QuestionError::NoMatch("retrieval returned nothing".into()))?;
            Some(t)
        } else {
            None
        };
        let prev_image = self.render(&prev.chart_script, &prev.chart_csv)?;
        let features_json = serde_json::to_value(&features).expect("features serialize");

        let mut feedback: Option<String> = None;
        let mut last_report = None;
        for attempt in 1..=2 {
            let mut ctx = json!({
                "previous": {
                    "id": prev.id,
                    "stem": prev.stem,
                    "options": prev.options,
                    "correct_label": prev.correct_label,
                    "explanation": prev.explanation,
                    "chart_script": prev.chart_script,
                    "csv": prev.chart_csv,
                },
                "revision_prompt": revision_prompt,
                "features": features_json,
                "changed_features": changed,
            });
            if let Some(t) = &reference {
                ctx["reference_template"] = template_context(t);
            }
            let out = self.call(
                LlmRequest::chat(
                    self.model_id,
                    "question_revision",
                    REVISE_SYSTEM.into(),
                    prompt_with_context(&with_feedback(REVISE_INSTRUCTIONS, feedback.as_deref()), &ctx),
                )
                .with_image(prev_image.as_ref().map(|r| r.png_base64.clone())),
            )?;
            let v = out.payload();
            let script = str_field(v, "chart_script");
            let csv = str_field(v, "csv");
            let stem = str_field(v, "stem");
            let explanation = str_field(v, "explanation");
            let options = draft_options(v);
            let report = validate_draft(&Draft {
                stem: &stem,
                options: options.clone(),
                explanation: &explanation,
                chart_script: &script,
                chart_csv: &csv,
                expected_options: features.option_count(),
            });
            if report.ok {
                let rendered = self.render(&script, &csv)?;
                let correct_label = options.iter().find(|o| o.is_correct).map(|o| o.label.clone()).unwrap_or_default();
                return Ok(Generated {
                    version: QuestionVersion {
                        id: id.to_string(),
                        parent_id: Some(prev.id.clone()),
                        features: features.clone(),
                        stem,
                        options: options.into_iter().map(|o| QuestionOption { label: o.label, text: o.text }).collect(),
                        correct_label,
                        explanation,
                        chart_script: script,
                        chart_csv: csv,
                        chart_image_ref: rendered.as_ref().map(RenderOutput::image_ref),
                        created_at: self.clock.timestamp(),
                        checked: false,
                        template_id: reference.as_ref().map_or_else(|| prev.template_id.clone(), |t| t.id.clone()),
                    },
                    render: rendered,
                    report,
                    attempts: attempt,
                });
            }
            feedback = Some(report.summary());
            last_report = Some(report);
        }
        Err(QuestionError::GenerationFailed(last_report.expect("two attempts ran")))
    }
}

// -------------------------------------------------------------- reliability

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptKind {
    Generation,
    Revision,
}

/// One generate or revise call, successful or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub kind: AttemptKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version_id: Option<String>,
    pub duration_s: f64,
    pub auto_pass: bool,
    pub recorded_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityStats {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen_mean_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen_pass_rate: Option<f64>,
    pub gen_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rev_mean_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rev_pass_rate: Option<f64>,
    pub rev_count: usize,
}

pub fn reliability_stats(attempts: &[AttemptRecord]) -> Result<ReliabilityStats, QuestionError> {
    if attempts.is_empty() {
        return Err(QuestionError::NoData);
    }
    let summarize = |kind| {
        let xs: Vec<&AttemptRecord> = attempts.iter().filter(|a| a.kind == kind).collect();
        if xs.is_empty() {
            return (None, None, 0);
        }
        let n = xs.len() as f64;
        let mean = xs.iter().map(|a| a.duration_s).sum::<f64>() / n;
        let pass = xs.iter().filter(|a| a.auto_pass).count() as f64 / n;
        (Some(mean), Some(pass), xs.len())
    };
    let (gen_mean_s, gen_pass_rate, gen_count) = summarize(AttemptKind::Generation);
    let (rev_mean_s, rev_pass_rate, rev_count) = summarize(AttemptKind::Revision);
    Ok(ReliabilityStats { gen_mean_s, gen_pass_rate, gen_count, rev_mean_s, rev_pass_rate, rev_count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::ManualClock;
    use crate::features::{ChartType, KnowledgePoint, Misleader};
    use crate::gateway::{FixtureOutput, GatewayConfig, MockProvider};
    use crate::render::NoRenderer;

    fn store() -> TemplateStore {
        let s = TemplateStore::new();
        s.ingest_bundle(&TemplateStore::seed_bundle_dir()).unwrap();
        s
    }

    fn pipeline<'a>(g: &'a Gateway, t: &'a TemplateStore, c: &'a ManualClock) -> QuestionPipeline<'a> {
        QuestionPipeline { gateway: g, templates: t, renderer: &NoRenderer, clock: c, model_id: "mock-1", seed: Some(7) }
    }

    fn bar_features() -> McqFeatureSet {
        McqFeatureSet { chart_type: Some(ChartType::Bar), ..Default::default() }
    }

    #[test]
    fn analyze_bar_compare_request() {
        let (g, t, c) = (Gateway::mock(), store(), ManualClock::default());
        let f = pipeline(&g, &t, &c)
            .analyze_requirements(&InstructorInput::text(
                "I need a bar chart question to retrieve and compare values, but it should not be overly straightforward.",
            ))
            .unwrap();
        assert_eq!(f.chart_type, Some(ChartType::Bar));
        assert!(f.knowledge_points.contains(&KnowledgePoint::RetrieveValue));
        assert!(f.knowledge_points.contains(&KnowledgePoint::CompareValues));
        assert!(f.difficulty_target >= 3, "{f:?}");
    }

    #[test]
    fn analyze_defaults_and_override_precedence() {
        let (g, t, c) = (Gateway::mock(), store(), ManualClock::default());
        let p = pipeline(&g, &t, &c);
        let f = p.analyze_requirements(&InstructorInput::text("A pie chart please")).unwrap();
        assert_eq!(f, McqFeatureSet { chart_type: Some(ChartType::Pie), ..Default::default() });

        let mut input = InstructorInput::text("A bar chart with three distractors");
        input.feature_overrides.distractor_count = Some(4);
        assert_eq!(p.analyze_requirements(&input).unwrap().distractor_count, 4);
        assert!(p.analyze_requirements(&InstructorInput::default()).is_err());
    }

    #[test]
    fn generate_bar_question() {
        let (g, t, c) = (Gateway::mock(), store(), ManualClock::default());
        let out = pipeline(&g, &t, &c).generate_question(&bar_features(), "v1").unwrap();
        let q = out.version;
        assert_eq!(q.options.len(), 4);
        assert!(q.parent_id.is_none());
        assert!(validate_question(&q).ok);
        assert_eq!(q.options.iter().filter(|o| o.label == q.correct_label).count(), 1);
        let again = pipeline(&g, &t, &ManualClock::default()).generate_question(&bar_features(), "v1").unwrap();
        assert_eq!(again.version, q);
    }

    #[test]
    fn two_correct_options_fail_generation() {
        let bad = json!({"stem": "Which?", "explanation": "Because.", "options": [
            {"label": "A", "text": "1", "is_correct": true},
            {"label": "B", "text": "2", "is_correct": true},
            {"label": "C", "text": "3", "is_correct": false},
            {"label": "D", "text": "4", "is_correct": false}]});
        let mock = MockProvider::new().script_matching("qa_generation", "", vec![FixtureOutput::Json(bad)]);
        let g = Gateway::with_mock(mock, GatewayConfig::default());
        let (t, c) = (store(), ManualClock::default());
        match pipeline(&g, &t, &c).generate_question(&bar_features(), "v1") {
            Err(QuestionError::GenerationFailed(r)) => assert_eq!(r.codes(), vec![ViolationCode::MultipleCorrect]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn revision_adds_hint_and_links_parent() {
        let (g, t, c) = (Gateway::mock(), store(), ManualClock::default());
        let p = pipeline(&g, &t, &c);
        let f = McqFeatureSet { misleader: Some(Misleader::TruncatedAxis), ..bar_features() };
        let v1 = p.generate_question(&f, "v1").unwrap().version;
        let v2 = p
            .revise_question(&v1, "Add a subtle hint to the question stem", &FeatureDeltas::default(), "v2")
            .unwrap()
            .version;
        assert_eq!(v2.parent_id.as_deref(), Some("v1"));
        assert_ne!(v2.stem, v1.stem);
        assert_eq!(v2.features, v1.features);
    }

    #[test]
    fn revision_switches_chart_and_grows_options() {
        let (g, t, c) = (Gateway::mock(), store(), ManualClock::default());
        let p = pipeline(&g, &t, &c);
        let v1 = p.generate_question(&bar_features(), "v1").unwrap().version;
        let deltas = FeatureDeltas {
            distractor_count: Some(4),
            plausibility: Some(5),
            chart_type: Some(Some(ChartType::Line)),
            ..Default::default()
        };
        let v2 = p.revise_question(&v1, "", &deltas, "v2").unwrap().version;
        assert_eq!(v2.options.len(), 5);
        assert_eq!(v2.features.chart_type, Some(ChartType::Line));
        assert!(v2.template_id.starts_with("line"));
        assert!(validate_question(&v2).ok);
        assert_eq!(v2.features.context_domain, v1.features.context_domain);
    }

    #[test]
    fn empty_revision_rejected() {
        let (g, t, c) = (Gateway::mock(), store(), ManualClock::default());
        let p = pipeline(&g, &t, &c);
        let v1 = p.generate_question(&bar_features(), "v1").unwrap().version;
        assert_eq!(
            p.revise_question(&v1, "  ", &FeatureDeltas::default(), "v2").unwrap_err(),
            QuestionError::NoOpRevision
        );
    }

    fn record(kind: AttemptKind, duration_s: f64, auto_pass: bool) -> AttemptRecord {
        AttemptRecord { kind, version_id: None, duration_s, auto_pass, recorded_at: String::new() }
    }

    #[test]
    fn reliability_arithmetic() {
        let gens: Vec<_> = [true, true, true, false]
            .iter()
            .map(|p| record(AttemptKind::Generation, 1.0, *p))
            .collect();
        assert_eq!(reliability_stats(&gens).unwrap().gen_pass_rate, Some(0.75));
        let s = reliability_stats(&[record(AttemptKind::Generation, 10.0, true), record(AttemptKind::Generation, 14.0, true)]).unwrap();
        assert_eq!(s.gen_mean_s, Some(12.0));
        let s = reliability_stats(&[record(AttemptKind::Revision, 3.0, false)]).unwrap();
        assert_eq!((s.gen_mean_s, s.gen_pass_rate, s.rev_pass_rate), (None, None, Some(0.0)));
        assert_eq!(reliability_stats(&[]).unwrap_err(), QuestionError::NoData);
    }
}
