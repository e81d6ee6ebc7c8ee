//! Every document the studio persists or returns conforms to its schema.

use std::path::{Path, PathBuf};

use chartquiz_core::features::FeatureDeltas;
use chartquiz_core::gateway::SchemaRegistry;
use chartquiz_core::question::InstructorInput;
use chartquiz_core::students::CohortSpec;
use chartquiz_core::studio::{BenchmarkRequest, Studio, StudioConfig};
use serde::Serialize;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/walkthrough").join(name)
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn conforms(reg: &SchemaRegistry, id: &str, doc: &impl Serialize) {
    let value = serde_json::to_value(doc).unwrap();
    if let Err(e) = reg.validate(id, &value) {
        panic!("{id} does not conform: {e}\n{value:#}");
    }
}

#[test]
fn studio_documents_conform() {
    let reg = SchemaRegistry::builtin();
    let dir = tempfile::tempdir().unwrap();
    let studio = Studio::open(StudioConfig {
        data_dir: dir.path().to_path_buf(),
        fixtures: vec![fixture("mock_fixtures.json")],
        ..Default::default()
    })
    .unwrap();

    let input_doc = read(&fixture("instructor_input.json"));
    reg.validate("instructor_input", &input_doc).unwrap();
    let spec_doc = read(&fixture("cohort_spec.json"));
    reg.validate("cohort_spec", &spec_doc).unwrap();
    conforms(&reg, "cohort_spec", &CohortSpec::default());

    let pid = studio.create_project("Schemas", None).unwrap().id;
    let input: InstructorInput = serde_json::from_value(input_doc).unwrap();
    studio.analyze_requirements(&pid, &input).unwrap();
    let v1 = studio.generate(&pid, None).unwrap();
    conforms(&reg, "question_version", &v1);
    let spec: CohortSpec = serde_json::from_value(spec_doc).unwrap();
    studio.generate_cohort(&pid, &spec).unwrap();
    let r1 = studio.simulate(&pid, &v1.id).unwrap();
    conforms(&reg, "simulation_run", &r1);

    let v2 = studio.revise(&pid, &v1.id, "Add a hint", &FeatureDeltas::default()).unwrap();
    conforms(&reg, "question_version", &v2);
    let r2 = studio.simulate(&pid, &v2.id).unwrap();
    conforms(&reg, "simulation_run", &r2);

    conforms(&reg, "project", &studio.project(&pid).unwrap());
    conforms(&reg, "sankey_model", &studio.sankey(&pid, &r2.id).unwrap());
    conforms(&reg, "answer_distribution", &studio.distribution(&pid, &r2.id).unwrap());
    conforms(&reg, "top_strategies", &studio.strategies(&pid, &r2.id, 5).unwrap());
    let stats = studio.compare(&pid, &r2.id).unwrap();
    assert_eq!(stats.entries.len(), 2);
    conforms(&reg, "version_stats", &stats);
    conforms(&reg, "reliability_stats", &studio.reliability(&pid).unwrap());

    let report = studio
        .benchmark(&BenchmarkRequest {
            model_ids: vec!["mock-1".into(), "mock-2".into()],
            rounds: 1,
            cohort: Some(CohortSpec { size: 3, ..Default::default() }),
            question_features: Vec::new(),
            weights: None,
        })
        .unwrap();
    conforms(&reg, "benchmark_report", &report);

    let persisted = read(&dir.path().join("projects").join(&pid).join("project.json"));
    reg.validate("project", &persisted).unwrap();
}

#[test]
fn seed_manifest_conforms() {
    let reg = SchemaRegistry::builtin();
    let manifest = read(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../templates/seed/manifest.json"));
    reg.validate("template_manifest", &manifest).unwrap();
}

#[test]
fn schemas_reject_stray_fields() {
    let reg = SchemaRegistry::builtin();
    let mut spec = serde_json::to_value(CohortSpec::default()).unwrap();
    spec["surprise"] = Value::Bool(true);
    assert!(reg.validate("cohort_spec", &spec).is_err());
}
