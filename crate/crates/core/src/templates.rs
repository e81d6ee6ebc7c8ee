//! Chart-template corpus: bundle ingestion and feature-based retrieval.
//!
//! A bundle is a directory holding `manifest.json` (an array of
//! descriptors) and one subdirectory per template with `chart.js`,
//! `data.csv`, `qa.json` and `meta.json`.
//!
//! Retrieval hard-filters on the requested chart type, then ranks by
//!
//! ```text
//! 0.5 * jaccard(knowledge_points)
//! + 0.3 * [template misleaders ⊇ requested misleaders]
//! + 0.2 * (1 - |difficulty_hint - difficulty_target| / 4)
//! ```
//!
//! with ties broken by ascending id.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{ChartType, KnowledgePoint, McqFeatureSet, Misleader};
use crate::table::Table;

pub const WEIGHT_KNOWLEDGE: f64 = 0.5;
pub const WEIGHT_MISLEADER: f64 = 0.3;
pub const WEIGHT_DIFFICULTY: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TemplateError {
    #[error("malformed manifest: {0}")]
    MalformedManifest(String),
    #[error("template store is empty")]
    EmptyStore,
    #[error("no template matches: {0}")]
    NoMatch(String),
    #[error("k must be >= 1")]
    InvalidQuery,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaTemplate {
    pub stem_template: String,
    pub option_templates: Vec<String>,
    pub explanation_template: String,
    #[serde(default)]
    pub placeholders: Vec<String>,
}

impl QaTemplate {
    /// Count of `{{name}}` tokens across stem, options and explanation.
    pub fn placeholder_tokens(&self) -> usize {
        std::iter::once(&self.stem_template)
            .chain(&self.option_templates)
            .chain(std::iter::once(&self.explanation_template))
            .map(|s| {
                s.match_indices("{{")
                    .filter(|(i, _)| s[i + 2..].find("}}").is_some_and(|end| end > 0))
                    .count()
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartTemplate {
    pub id: String,
    pub title: String,
    pub chart_type: ChartType,
    pub misleader_tags: BTreeSet<Misleader>,
    pub knowledge_points: BTreeSet<KnowledgePoint>,
    pub chart_script: String,
    pub sample_csv: String,
    pub qa_template: QaTemplate,
    pub difficulty_hint: u8,
    /// Drawing library pin from the manifest, e.g. `d3@7.9.0`.
    pub library: String,
}

impl ChartTemplate {
    pub fn validate(&self) -> Result<(), String> {
        Table::parse(&self.sample_csv).map_err(|e| format!("sample CSV: {e}"))?;
        if self.qa_template.placeholder_tokens() == 0 {
            return Err("QA template has no placeholder".into());
        }
        if !(1..=5).contains(&self.difficulty_hint) {
            return Err(format!("difficulty_hint {} outside 1..=5", self.difficulty_hint));
        }
        if self.chart_script.trim().is_empty() {
            return Err("chart script is empty".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub path: String,
    pub chart_type: ChartType,
    #[serde(default = "default_library")]
    pub library: String,
}

fn default_library() -> String {
    "d3@7".into()
}

#[derive(Debug, Deserialize)]
struct TemplateMeta {
    chart_type: ChartType,
    #[serde(default)]
    misleader_tags: BTreeSet<Misleader>,
    #[serde(default)]
    knowledge_points: BTreeSet<KnowledgePoint>,
    difficulty_hint: u8,
    #[serde(default)]
    title: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvalidTemplate {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub ingested: usize,
    pub invalid: Vec<InvalidTemplate>,
}

#[derive(Debug, Clone)]
pub struct TemplateQuery {
    pub features: McqFeatureSet,
    pub k: usize,
}

/// Soft similarity between a template and requested features, in [0, 1].
pub fn score(template: &ChartTemplate, features: &McqFeatureSet) -> f64 {
    let inter = template.knowledge_points.intersection(&features.knowledge_points).count();
    let union = template.knowledge_points.union(&features.knowledge_points).count();
    let jaccard = if union == 0 { 1.0 } else { inter as f64 / union as f64 };
    let misleaders_covered = features.misleader.is_none_or(|m| template.misleader_tags.contains(&m));
    let gap = (template.difficulty_hint as f64 - features.difficulty_target as f64).abs();
    let difficulty = (1.0 - gap / 4.0).clamp(0.0, 1.0);
    WEIGHT_KNOWLEDGE * jaccard + WEIGHT_MISLEADER * f64::from(u8::from(misleaders_covered)) + WEIGHT_DIFFICULTY * difficulty
}

/// Read-mostly template index. Ingestion builds a new map and swaps it in.
#[derive(Debug, Default)]
pub struct TemplateStore {
    index: RwLock<Arc<BTreeMap<String, ChartTemplate>>>,
}

impl TemplateStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// The seed bundle shipped in `templates/seed`.
    pub fn seed_bundle_dir() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../templates/seed")
    }

    pub fn snapshot(&self) -> Arc<BTreeMap<String, ChartTemplate>> {
        self.index.read().expect("template index lock").clone()
    }

    pub fn len(&self) -> usize {
        self.snapshot().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, id: &str) -> Option<ChartTemplate> {
        self.snapshot().get(id).cloned()
    }

    pub fn insert(&self, template: ChartTemplate) -> Result<(), String> {
        template.validate()?;
        let mut guard = self.index.write().expect("template index lock");
        let mut next = (**guard).clone();
        next.insert(template.id.clone(), template);
        *guard = Arc::new(next);
        Ok(())
    }

    pub fn ingest_bundle(&self, bundle: &Path) -> Result<IngestReport, TemplateError> {
        let manifest_path = bundle.join("manifest.json");
        if !manifest_path.exists() {
            let empty = std::fs::read_dir(bundle)
                .map_err(|e| TemplateError::MalformedManifest(format!("{}: {e}", bundle.display())))?
                .next()
                .is_none();
            return if empty {
                Ok(IngestReport::default())
            } else {
                Err(TemplateError::MalformedManifest("manifest.json not found".into()))
            };
        }
        let text = std::fs::read_to_string(&manifest_path)
            .map_err(|e| TemplateError::MalformedManifest(e.to_string()))?;
        let entries: Vec<ManifestEntry> =
            serde_json::from_str(&text).map_err(|e| TemplateError::MalformedManifest(e.to_string()))?;

        let mut report = IngestReport::default();
        let mut loaded = BTreeMap::new();
        for entry in entries {
            match load_template(bundle, &entry) {
                Ok(t) if loaded.contains_key(&t.id) => report.invalid.push(InvalidTemplate {
                    id: t.id,
                    reason: "duplicate id in manifest".into(),
                }),
                Ok(t) => {
                    loaded.insert(t.id.clone(), t);
                }
                Err(reason) => report.invalid.push(InvalidTemplate { id: entry.id, reason }),
            }
        }
        report.ingested = loaded.len();

        let mut guard = self.index.write().expect("template index lock");
        let mut next = (**guard).clone();
        next.extend(loaded);
        *guard = Arc::new(next);
        Ok(report)
    }

    pub fn retrieve(&self, query: &TemplateQuery) -> Result<Vec<(ChartTemplate, f64)>, TemplateError> {
        if query.k == 0 {
            return Err(TemplateError::InvalidQuery);
        }
        let index = self.snapshot();
        if index.is_empty() {
            return Err(TemplateError::EmptyStore);
        }
        let features = &query.features;
        let mut ranked: Vec<(ChartTemplate, f64)> = index
            .values()
            .filter(|t| features.chart_type.is_none_or(|ct| t.chart_type == ct))
            .map(|t| (t.clone(), score(t, features)))
            .collect();
        if ranked.is_empty() {
            return Err(TemplateError::NoMatch(format!(
                "no template of chart type {}",
                features.chart_type.map_or("any", |c| c.as_str())
            )));
        }
        ranked.sort_by(|(a, sa), (b, sb)| sb.total_cmp(sa).then_with(|| a.id.cmp(&b.id)));
        ranked.truncate(query.k);
        Ok(ranked)
    }
}

fn load_template(bundle: &Path, entry: &ManifestEntry) -> Result<ChartTemplate, String> {
    let dir = bundle.join(&entry.path);
    let read = |name: &str| std::fs::read_to_string(dir.join(name)).map_err(|e| format!("{name}: {e}"));
    let meta: TemplateMeta = serde_json::from_str(&read("meta.json")?).map_err(|e| format!("meta.json: {e}"))?;
    let qa_template: QaTemplate = serde_json::from_str(&read("qa.json")?).map_err(|e| format!("qa.json: {e}"))?;
    if meta.chart_type != entry.chart_type {
        return Err(format!(
            "meta chart_type {} disagrees with manifest {}",
            meta.chart_type, entry.chart_type
        ));
    }
    let template = ChartTemplate {
        id: entry.id.clone(),
        title: meta.title,
        chart_type: meta.chart_type,
        misleader_tags: meta.misleader_tags,
        knowledge_points: meta.knowledge_points,
        chart_script: read("chart.js")?,
        sample_csv: read("data.csv")?,
        qa_template,
        difficulty_hint: meta.difficulty_hint,
        library: entry.library.clone(),
    };
    template.validate()?;
    Ok(template)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seed_store() -> TemplateStore {
        let store = TemplateStore::new();
        let report = store.ingest_bundle(&TemplateStore::seed_bundle_dir()).unwrap();
        assert!(report.invalid.is_empty(), "{report:?}");
        store
    }

    #[test]
    fn seed_bundle_covers_all_chart_types() {
        let store = seed_store();
        assert!(store.len() >= 20);
        let types: BTreeSet<_> = store.snapshot().values().map(|t| t.chart_type).collect();
        assert_eq!(types.len(), ChartType::ALL.len());
    }

    #[test]
    fn ingest_is_idempotent() {
        let store = seed_store();
        let before: Vec<_> = store.snapshot().keys().cloned().collect();
        store.ingest_bundle(&TemplateStore::seed_bundle_dir()).unwrap();
        assert_eq!(store.snapshot().keys().cloned().collect::<Vec<_>>(), before);
    }

    #[test]
    fn empty_directory_ingests_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let report = TemplateStore::new().ingest_bundle(dir.path()).unwrap();
        assert_eq!(report, IngestReport::default());
    }

    #[test]
    fn malformed_manifest_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("manifest.json"), "{not json").unwrap();
        assert!(matches!(
            TemplateStore::new().ingest_bundle(dir.path()),
            Err(TemplateError::MalformedManifest(_))
        ));
    }

    #[test]
    fn ragged_csv_reported_not_dropped_silently() {
        let dir = tempfile::tempdir().unwrap();
        let seed = TemplateStore::seed_bundle_dir();
        for id in ["bar_plain", "pie_plain"] {
            let dst = dir.path().join(id);
            std::fs::create_dir(&dst).unwrap();
            for f in ["chart.js", "data.csv", "qa.json", "meta.json"] {
                std::fs::copy(seed.join(id).join(f), dst.join(f)).unwrap();
            }
        }
        std::fs::write(dir.path().join("pie_plain/data.csv"), "segment,share\nMobile,48\nDesktop\n").unwrap();
        std::fs::write(
            dir.path().join("manifest.json"),
            r#"[{"id":"bar_plain","path":"bar_plain","chart_type":"bar"},{"id":"pie_plain","path":"pie_plain","chart_type":"pie"}]"#,
        )
        .unwrap();
        let store = TemplateStore::new();
        let report = store.ingest_bundle(dir.path()).unwrap();
        assert_eq!(report.ingested, 1);
        assert_eq!(report.invalid.len(), 1);
        assert_eq!(report.invalid[0].id, "pie_plain");
        assert!(report.invalid[0].reason.contains("fields"));
    }

    #[test]
    fn bar_truncated_axis_ranks_first() {
        let store = seed_store();
        let features = McqFeatureSet {
            chart_type: Some(ChartType::Bar),
            misleader: Some(Misleader::TruncatedAxis),
            ..Default::default()
        };
        let top = store.retrieve(&TemplateQuery { features, k: 1 }).unwrap();
        assert_eq!(top.len(), 1);
        assert_eq!(top[0].0.id, "bar_truncated_axis");
    }

    #[test]
    fn unconstrained_query_returns_all_sorted() {
        let store = seed_store();
        let out = store
            .retrieve(&TemplateQuery { features: McqFeatureSet::default(), k: store.len() })
            .unwrap();
        assert_eq!(out.len(), store.len());
        for w in out.windows(2) {
            assert!(w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0.id < w[1].0.id));
        }
    }

    #[test]
    fn equal_scores_tie_break_on_id() {
        let store = TemplateStore::new();
        let base = seed_store().get("bar_plain").unwrap();
        for id in ["zeta", "alpha"] {
            store.insert(ChartTemplate { id: id.into(), ..base.clone() }).unwrap();
        }
        let out = store
            .retrieve(&TemplateQuery { features: McqFeatureSet::default(), k: 2 })
            .unwrap();
        assert_eq!(out[0].1, out[1].1);
        assert_eq!(out[0].0.id, "alpha");
    }

    #[test]
    fn errors_for_empty_store_and_missing_type() {
        let q = TemplateQuery { features: McqFeatureSet::default(), k: 1 };
        assert_eq!(TemplateStore::new().retrieve(&q).unwrap_err(), TemplateError::EmptyStore);
        let store = TemplateStore::new();
        store.insert(seed_store().get("bar_plain").unwrap()).unwrap();
        let q = TemplateQuery {
            features: McqFeatureSet { chart_type: Some(ChartType::Pie), ..Default::default() },
            k: 1,
        };
        assert!(matches!(store.retrieve(&q), Err(TemplateError::NoMatch(_))));
    }
}
