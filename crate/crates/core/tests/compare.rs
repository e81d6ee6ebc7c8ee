mod common;

use std::collections::BTreeMap;

use chartquiz_core::reasoning::compare_versions;
use chartquiz_core::students::{RatingKey, StudentResponse};

fn cohort(version: &str, wrong: usize, rating: impl Fn(usize) -> u8) -> Vec<StudentResponse> {
    (0..20)
        .map(|i| {
            let mut r = common::response(&format!("s{i:02}"), if i < wrong { "B" } else { "A" }, "A");
            r.question_version_id = version.into();
            r.ratings = common::ratings(rating(i));
            r
        })
        .collect()
}

#[test]
fn accuracy_drop_between_versions() {
    let options: Vec<String> = ["A", "B", "C", "D"].map(String::from).to_vec();
    let mut r1 = common::run_from("r1", &options, "A", cohort("v1", 1, |_| 2));
    let r2 = common::run_from("r2", &options, "A", cohort("v2", 5, |i| if i < 10 { 3 } else { 4 }));
    let labels: BTreeMap<String, usize> = (0..20).map(|i| (format!("s{i:02}"), usize::from(i >= 10))).collect();
    r1.assignment = Some(common::assignment(labels, 2));

    let stats = compare_versions(&[&r1, &r2]).unwrap();
    assert_eq!(stats.entries.len(), 2);
    let (first, second) = (&stats.entries[0], &stats.entries[1]);
    assert!(first.previous.is_none());
    assert_eq!(first.current.accuracy, Some(0.95));
    assert_eq!(second.current.accuracy, Some(0.75));
    assert_eq!(second.previous.as_ref().map(|p| p.version_id.as_str()), Some("v1"));
    assert_eq!(second.previous.as_ref().and_then(|p| p.accuracy), Some(0.95));

    assert_eq!(first.current.overall_means[&RatingKey::HintDependency], 2.0);
    assert_eq!(second.current.overall_means[&RatingKey::ChartComplexity], 3.5);
    assert_eq!(first.current.group_means.len(), 2);
    assert_eq!(first.current.group_means[&1][&RatingKey::DataDifficulty], 2.0);
    assert!(second.current.group_means.is_empty());

    let json = serde_json::to_value(&stats).unwrap();
    assert_eq!(json["entries"][1]["accuracy"], 0.75);
    assert_eq!(json["entries"][1]["previous"]["accuracy"], 0.95);
}

#[test]
fn compare_needs_a_run() {
    assert!(compare_versions(&[]).is_err());
}
