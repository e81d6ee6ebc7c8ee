//! Builders shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use chartquiz_core::cohort::ClusterAssignment;
use chartquiz_core::reasoning::{CanonicalTrace, StrategyStep};
use chartquiz_core::students::{Ratings, SimulationRun, SimulationSlot, StudentResponse};
use rand::Rng;

pub const LABELS: &[&str] = &["understand_question", "check_chart_axis", "compare_options", "verify_bar_heights", "select_answer"];

pub fn ratings(v: u8) -> Ratings {
    Ratings {
        context_clarity: v,
        chart_complexity: v,
        data_difficulty: v,
        visual_encoding_complexity: v,
        overall_cognitive_challenge: v,
        hint_dependency: v,
    }
}

pub fn response(profile_id: &str, selected: &str, correct: &str) -> StudentResponse {
    StudentResponse {
        profile_id: profile_id.into(),
        question_version_id: "v1".into(),
        selected_label: selected.into(),
        raw_trace: vec!["I read the question.".into()],
        ratings: ratings(3),
        reasoning_token_count: 10,
        correct: selected == correct,
        latency_ms: 100,
    }
}

pub fn run_from(id: &str, option_labels: &[String], correct: &str, responses: Vec<StudentResponse>) -> SimulationRun {
    SimulationRun {
        id: id.into(),
        question_version_id: responses.first().map_or("v1".into(), |r| r.question_version_id.clone()),
        model_id: "mock-1".into(),
        created_at: String::new(),
        seed: 0,
        option_labels: option_labels.to_vec(),
        correct_label: correct.into(),
        profiles: Vec::new(),
        slots: responses
            .into_iter()
            .map(|r| SimulationSlot { profile_id: r.profile_id.clone(), response: Some(r), error: None })
            .collect(),
        traces: Vec::new(),
        assignment: None,
    }
}

pub fn assignment(labels: BTreeMap<String, usize>, k: usize) -> ClusterAssignment {
    ClusterAssignment { k, labels, centroids: vec![vec![0.0; 16]; k], inertia: 0.0, seed: 0, iterations: 1, mask: None }
}

/// Up to `max_traces` traces of 1..=`max_steps` steps over a small alphabet,
/// with answers drawn from up to `max_options` options and up to 4 clusters.
pub fn random_trace_set(
    rng: &mut impl Rng,
    max_traces: usize,
    max_steps: usize,
    max_options: usize,
    alphabet: usize,
) -> (SimulationRun, Vec<CanonicalTrace>, ClusterAssignment) {
    let n = rng.gen_range(0..=max_traces);
    let n_options = rng.gen_range(1..=max_options);
    let options: Vec<String> = (0..n_options).map(|i| ((b'A' + i as u8) as char).to_string()).collect();
    let k = rng.gen_range(1..=4);
    let mut traces = Vec::new();
    let mut responses = Vec::new();
    let mut labels = BTreeMap::new();
    for i in 0..n {
        let id = format!("s{i:02}");
        let sel = options[rng.gen_range(0..n_options)].clone();
        let cluster = rng.gen_range(0..k);
        let len = rng.gen_range(1..=max_steps);
        let steps = (0..len)
            .map(|_| StrategyStep {
                canonical_label: LABELS[rng.gen_range(0..alphabet.min(LABELS.len()))].to_string(),
                token_count: rng.gen_range(0..200),
            })
            .collect();
        labels.insert(id.clone(), cluster);
        responses.push(response(&id, &sel, &options[0]));
        traces.push(CanonicalTrace { profile_id: id, cluster_index: cluster, selected_label: sel, steps });
    }
    (run_from("r1", &options, &options[0], responses), traces, assignment(labels, k))
}
