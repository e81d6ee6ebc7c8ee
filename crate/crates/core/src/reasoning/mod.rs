//! Trace canonicalization and the aggregates built on canonical traces:
//! the prefix-merged Sankey model, top strategies, answer distribution and
//! cross-version statistics.

mod vocabulary;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::cohort::ClusterAssignment;
use crate::gateway::{prompt_with_context, Gateway, GatewayError, LlmRequest};
use crate::students::{largest_remainder, RatingKey, SimulationRun, StudentResponse};
pub use vocabulary::{StepDef, StepVocabulary};

pub const DEFAULT_MAX_STEPS: usize = 6;
pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReasoningError {
    #[error("canonicalization failed: {0}")]
    CanonicalizationFailed(String),
    #[error("assignment mismatch: {0}")]
    AssignmentMismatch(String),
    #[error("no runs to compare")]
    NoRuns,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategyStep {
    pub canonical_label: String,
    pub token_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalTrace {
    pub profile_id: String,
    pub cluster_index: usize,
    pub selected_label: String,
    pub steps: Vec<StrategyStep>,
}

impl CanonicalTrace {
    pub fn labels(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.canonical_label.as_str()).collect()
    }
}

// ---------------------------------------------------------- canonicalization

/// Splits `total` tokens over the steps by text-length share.
pub fn apportion_tokens(raw_trace: &[String], total: u64) -> Vec<u64> {
    let lens: Vec<f64> = raw_trace.iter().map(|s| s.chars().count().max(1) as f64).collect();
    let sum: f64 = lens.iter().sum();
    if sum == 0.0 {
        return vec![0; raw_trace.len()];
    }
    let shares: Vec<f64> = lens.iter().map(|l| l / sum).collect();
    largest_remainder(total as usize, &shares).into_iter().map(|n| n as u64).collect()
}

/// Merges consecutive equal labels, then folds everything past
/// `max_steps - 1` into the last kept step. Token total is preserved.
pub fn merge_and_truncate(steps: Vec<StrategyStep>, max_steps: usize) -> Vec<StrategyStep> {
    let mut merged: Vec<StrategyStep> = Vec::with_capacity(steps.len());
    for step in steps {
        match merged.last_mut() {
            Some(last) if last.canonical_label == step.canonical_label => last.token_count += step.token_count,
            _ => merged.push(step),
        }
    }
    let keep = max_steps.max(1);
    if merged.len() > keep {
        let tail: u64 = merged[keep..].iter().map(|s| s.token_count).sum();
        merged.truncate(keep);
        merged[keep - 1].token_count += tail;
    }
    merged
}

/// Pure half of canonicalization, once labels are known.
pub fn steps_from_labels(raw_trace: &[String], labels: &[String], total_tokens: u64, max_steps: usize) -> Vec<StrategyStep> {
    let tokens = apportion_tokens(raw_trace, total_tokens);
    let steps = labels
        .iter()
        .zip(tokens)
        .map(|(l, t)| StrategyStep { canonical_label: l.clone(), token_count: t })
        .collect();
    merge_and_truncate(steps, max_steps)
}

const CANON_SYSTEM: &str = "You map free-text reasoning steps onto a fixed vocabulary of step labels.";
const CANON_INSTRUCTIONS: &str = "Give one label per step, in order, using only labels from the vocabulary. \
Reply with {\"labels\": [...]}.";

pub fn canonicalization_request(model_id: &str, vocab: &StepVocabulary, raw_trace: &[String], seed: Option<u64>) -> LlmRequest {
    let ctx = json!({ "steps": raw_trace, "vocabulary": vocab.labels() });
    LlmRequest::chat(model_id, "trace_canonicalization", CANON_SYSTEM.into(), prompt_with_context(CANON_INSTRUCTIONS, &ctx))
        .with_seed(seed)
}

fn check_labels(vocab: &StepVocabulary, expected: usize, v: &Value) -> Result<Vec<String>, String> {
    let labels: Vec<String> = serde_json::from_value(v["labels"].clone()).map_err(|e| e.to_string())?;
    if labels.len() != expected {
        return Err(format!("{} labels for {expected} steps", labels.len()));
    }
    if let Some(bad) = labels.iter().find(|l| !vocab.contains(l)) {
        return Err(format!("label `{bad}` is not in the vocabulary"));
    }
    Ok(labels)
}

pub fn canonicalize_trace(
    gateway: &Gateway,
    model_id: &str,
    vocab: &StepVocabulary,
    raw_trace: &[String],
    total_tokens: u64,
    max_steps: usize,
) -> Result<Vec<StrategyStep>, ReasoningError> {
    if raw_trace.is_empty() {
        return Err(ReasoningError::CanonicalizationFailed("empty trace".into()));
    }
    let request = canonicalization_request(model_id, vocab, raw_trace, None);
    let response = gateway
        .complete_checked(&request, &|v| check_labels(vocab, raw_trace.len(), v).map(drop))
        .map_err(|e| ReasoningError::CanonicalizationFailed(e.to_string()))?;
    let labels = check_labels(vocab, raw_trace.len(), response.payload()).map_err(ReasoningError::CanonicalizationFailed)?;
    Ok(steps_from_labels(raw_trace, &labels, total_tokens, max_steps))
}

/// Canonicalizes `responses` concurrently; one outcome per response, in order.
pub fn canonicalize_responses(
    gateway: &Gateway,
    vocab: &StepVocabulary,
    model_id: &str,
    seed: u64,
    responses: &[&StudentResponse],
    max_steps: usize,
    parallel: usize,
) -> Result<Vec<Result<Vec<StrategyStep>, ReasoningError>>, ReasoningError> {
    let requests: Vec<LlmRequest> = responses
        .iter()
        .map(|r| canonicalization_request(model_id, vocab, &r.raw_trace, Some(seed)))
        .collect();
    let outcomes = gateway
        .fan_out_checked(&requests, parallel, &|i, v| check_labels(vocab, responses[i].raw_trace.len(), v).map(drop))
        .map_err(|e: GatewayError| ReasoningError::CanonicalizationFailed(e.to_string()))?;
    Ok(responses
        .iter()
        .zip(outcomes)
        .map(|(r, outcome)| {
            let response = outcome.map_err(|e| ReasoningError::CanonicalizationFailed(format!("{}: {e}", r.profile_id)))?;
            let labels = check_labels(vocab, r.raw_trace.len(), response.payload())
                .map_err(ReasoningError::CanonicalizationFailed)?;
            Ok(steps_from_labels(&r.raw_trace, &labels, r.reasoning_token_count, max_steps))
        })
        .collect())
}

/// Canonicalizes every successful response of `run`, in slot order.
pub fn canonicalize_run(
    gateway: &Gateway,
    vocab: &StepVocabulary,
    run: &SimulationRun,
    assignment: &ClusterAssignment,
    max_steps: usize,
    parallel: usize,
) -> Result<Vec<CanonicalTrace>, ReasoningError> {
    let responses: Vec<&StudentResponse> = run.responses().collect();
    let clusters = responses
        .iter()
        .map(|r| {
            assignment.labels.get(&r.profile_id).copied().ok_or_else(|| {
                ReasoningError::AssignmentMismatch(format!("profile `{}` has no cluster", r.profile_id))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let outcomes = canonicalize_responses(gateway, vocab, &run.model_id, run.seed, &responses, max_steps, parallel)?;
    responses
        .iter()
        .zip(clusters)
        .zip(outcomes)
        .map(|((r, cluster_index), steps)| {
            Ok(CanonicalTrace {
                profile_id: r.profile_id.clone(),
                cluster_index,
                selected_label: r.selected_label.clone(),
                steps: steps?,
            })
        })
        .collect()
}

// ------------------------------------------------------------------- sankey

/// Students whose first `depth` labels equal `prefix`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SankeyBlock {
    pub prefix: Vec<String>,
    pub members: Vec<String>,
    /// Mean tokens spent on step `depth` by the members; drives spacing.
    pub mean_token_count: f64,
    pub children: Vec<SankeyBlock>,
    /// Members whose trace ends here, counted per cluster.
    pub terminal: BTreeMap<usize, usize>,
}

impl SankeyBlock {
    pub fn depth(&self) -> usize {
        self.prefix.len()
    }

    pub fn label(&self) -> &str {
        self.prefix.last().map_or("", String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerNode {
    pub label: String,
    pub correct: bool,
    pub count: usize,
    pub share: f64,
    pub blocks: Vec<SankeyBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SankeyModel {
    pub run_id: String,
    pub question_version_id: String,
    pub total_responses: usize,
    pub answer_nodes: Vec<AnswerNode>,
}

fn build_blocks(traces: &[&CanonicalTrace], depth: usize, prefix: &[String]) -> Vec<SankeyBlock> {
    let mut groups: BTreeMap<&str, Vec<&CanonicalTrace>> = BTreeMap::new();
    for t in traces.iter().filter(|t| t.steps.len() > depth) {
        groups.entry(t.steps[depth].canonical_label.as_str()).or_default().push(t);
    }
    groups
        .into_iter()
        .map(|(label, group)| {
            let mut p = prefix.to_vec();
            p.push(label.to_string());
            let mut terminal = BTreeMap::new();
            for t in group.iter().filter(|t| t.steps.len() == depth + 1) {
                *terminal.entry(t.cluster_index).or_insert(0) += 1;
            }
            let tokens: u64 = group.iter().map(|t| t.steps[depth].token_count).sum();
            let mut members: Vec<String> = group.iter().map(|t| t.profile_id.clone()).collect();
            members.sort();
            SankeyBlock {
                children: build_blocks(&group, depth + 1, &p),
                prefix: p,
                members,
                mean_token_count: tokens as f64 / group.len() as f64,
                terminal,
            }
        })
        .collect()
}

/// Checks that `traces` are exactly the run's successful responses, with
/// answers and clusters matching the run and `assignment`.
fn check_coverage(run: &SimulationRun, traces: &[CanonicalTrace], assignment: &ClusterAssignment) -> Result<(), ReasoningError> {
    let mismatch = |m: String| Err(ReasoningError::AssignmentMismatch(m));
    let responses: BTreeMap<&str, &str> =
        run.responses().map(|r| (r.profile_id.as_str(), r.selected_label.as_str())).collect();
    let mut seen = BTreeSet::new();
    for t in traces {
        if !seen.insert(t.profile_id.as_str()) {
            return mismatch(format!("duplicate trace for `{}`", t.profile_id));
        }
        match responses.get(t.profile_id.as_str()) {
            None => return mismatch(format!("trace for `{}` has no response in the run", t.profile_id)),
            Some(sel) if *sel != t.selected_label => {
                return mismatch(format!("trace for `{}` selects {} but the response selects {sel}", t.profile_id, t.selected_label))
            }
            _ => {}
        }
        if assignment.labels.get(&t.profile_id) != Some(&t.cluster_index) {
            return mismatch(format!("cluster of `{}` disagrees with the assignment", t.profile_id));
        }
        if t.steps.is_empty() {
            return mismatch(format!("trace for `{}` has no steps", t.profile_id));
        }
    }
    if seen.len() != responses.len() {
        return mismatch(format!("{} traces for {} responses", seen.len(), responses.len()));
    }
    Ok(())
}

pub fn aggregate_sankey(
    run: &SimulationRun,
    traces: &[CanonicalTrace],
    assignment: &ClusterAssignment,
) -> Result<SankeyModel, ReasoningError> {
    check_coverage(run, traces, assignment)?;
    let total = traces.len();
    let answer_nodes = run
        .option_labels
        .iter()
        .map(|label| {
            let chosen: Vec<&CanonicalTrace> = traces.iter().filter(|t| &t.selected_label == label).collect();
            AnswerNode {
                label: label.clone(),
                correct: *label == run.correct_label,
                count: chosen.len(),
                share: if total == 0 { 0.0 } else { chosen.len() as f64 / total as f64 },
                blocks: build_blocks(&chosen, 0, &[]),
            }
        })
        .collect();
    Ok(SankeyModel {
        run_id: run.id.clone(),
        question_version_id: run.question_version_id.clone(),
        total_responses: total,
        answer_nodes,
    })
}

fn block_conserves(b: &SankeyBlock) -> bool {
    let below: usize = b.children.iter().map(|c| c.members.len()).sum::<usize>() + b.terminal.values().sum::<usize>();
    below == b.members.len() && b.children.iter().all(block_conserves)
}

impl SankeyModel {
    /// Every block's members flow on to a child or end there; answer
    /// counts sum to the response total.
    pub fn conserves(&self) -> bool {
        self.answer_nodes.iter().map(|a| a.count).sum::<usize>() == self.total_responses
            && self.answer_nodes.iter().all(|a| {
                a.blocks.iter().map(|b| b.members.len()).sum::<usize>() == a.count && a.blocks.iter().all(block_conserves)
            })
    }

    /// All blocks in depth-first order.
    pub fn blocks(&self) -> Vec<(&str, &SankeyBlock)> {
        fn walk<'a>(answer: &'a str, b: &'a SankeyBlock, out: &mut Vec<(&'a str, &'a SankeyBlock)>) {
            out.push((answer, b));
            for c in &b.children {
                walk(answer, c, out);
            }
        }
        let mut out = Vec::new();
        for a in &self.answer_nodes {
            for b in &a.blocks {
                walk(&a.label, b, &mut out);
            }
        }
        out
    }
}

// -------------------------------------------------------------- strategies

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strategy {
    pub sequence: Vec<String>,
    pub frequency: usize,
}

/// Most frequent exact label sequences; ties broken by sequence order.
pub fn top_strategies(traces: &[CanonicalTrace], k: usize) -> Vec<Strategy> {
    let mut counts: BTreeMap<Vec<String>, usize> = BTreeMap::new();
    for t in traces {
        *counts.entry(t.steps.iter().map(|s| s.canonical_label.clone()).collect()).or_insert(0) += 1;
    }
    let mut all: Vec<Strategy> = counts.into_iter().map(|(sequence, frequency)| Strategy { sequence, frequency }).collect();
    // BTreeMap order already gives the lexicographic tie-break; the sort is stable.
    all.sort_by_key(|s| std::cmp::Reverse(s.frequency));
    all.truncate(k);
    all
}

// ------------------------------------------------------------ distribution

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionCell {
    pub cluster: usize,
    pub option: String,
    pub count: usize,
    /// Fraction of the option's choosers that belong to `cluster`.
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerDistribution {
    pub run_id: String,
    pub k: usize,
    pub option_totals: BTreeMap<String, usize>,
    pub cells: Vec<DistributionCell>,
}

impl AnswerDistribution {
    pub fn cell(&self, cluster: usize, option: &str) -> Option<&DistributionCell> {
        self.cells.iter().find(|c| c.cluster == cluster && c.option == option)
    }
}

pub fn answer_distribution(run: &SimulationRun, assignment: &ClusterAssignment) -> Result<AnswerDistribution, ReasoningError> {
    let mut counts: BTreeMap<(usize, &str), usize> = BTreeMap::new();
    for r in run.responses() {
        let cluster = *assignment.labels.get(&r.profile_id).ok_or_else(|| {
            ReasoningError::AssignmentMismatch(format!("profile `{}` has no cluster", r.profile_id))
        })?;
        if !run.option_labels.contains(&r.selected_label) {
            return Err(ReasoningError::AssignmentMismatch(format!("unknown option {}", r.selected_label)));
        }
        *counts.entry((cluster, r.selected_label.as_str())).or_insert(0) += 1;
    }
    let option_totals: BTreeMap<String, usize> = run
        .option_labels
        .iter()
        .map(|o| (o.clone(), counts.iter().filter(|((_, opt), _)| opt == o).map(|(_, n)| n).sum()))
        .collect();
    let mut cells = Vec::new();
    for cluster in 0..assignment.k {
        for option in &run.option_labels {
            let count = counts.get(&(cluster, option.as_str())).copied().unwrap_or(0);
            let total = option_totals[option];
            cells.push(DistributionCell {
                cluster,
                option: option.clone(),
                count,
                share: if total == 0 { 0.0 } else { count as f64 / total as f64 },
            });
        }
    }
    Ok(AnswerDistribution { run_id: run.id.clone(), k: assignment.k, option_totals, cells })
}

// ---------------------------------------------------------------- versions

pub type RatingMeans = BTreeMap<RatingKey, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionSnapshot {
    pub version_id: String,
    pub run_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    pub n_responses: usize,
    pub overall_means: RatingMeans,
    /// Keyed by cluster index; empty when the run was never clustered.
    pub group_means: BTreeMap<usize, RatingMeans>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionEntry {
    #[serde(flatten)]
    pub current: VersionSnapshot,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub previous: Option<VersionSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionStats {
    pub entries: Vec<VersionEntry>,
}

pub fn rating_means<'a>(ratings: impl IntoIterator<Item = &'a crate::students::Ratings>) -> RatingMeans {
    let rs: Vec<_> = ratings.into_iter().collect();
    if rs.is_empty() {
        return RatingMeans::new();
    }
    RatingKey::ALL
        .iter()
        .map(|k| (*k, rs.iter().map(|r| f64::from(r.get(*k))).sum::<f64>() / rs.len() as f64))
        .collect()
}

fn snapshot(run: &SimulationRun) -> VersionSnapshot {
    let mut group_means = BTreeMap::new();
    if let Some(a) = &run.assignment {
        for cluster in 0..a.k {
            let rs = run.responses().filter(|r| a.labels.get(&r.profile_id) == Some(&cluster)).map(|r| &r.ratings);
            group_means.insert(cluster, rating_means(rs));
        }
    }
    VersionSnapshot {
        version_id: run.question_version_id.clone(),
        run_id: run.id.clone(),
        accuracy: run.accuracy(),
        n_responses: run.responses().count(),
        overall_means: rating_means(run.responses().map(|r| &r.ratings)),
        group_means,
    }
}

/// One entry per run in the given order, each carrying its predecessor.
pub fn compare_versions(runs: &[&SimulationRun]) -> Result<VersionStats, ReasoningError> {
    if runs.is_empty() {
        return Err(ReasoningError::NoRuns);
    }
    let snaps: Vec<VersionSnapshot> = runs.iter().map(|r| snapshot(r)).collect();
    let entries = snaps
        .iter()
        .enumerate()
        .map(|(i, s)| VersionEntry { current: s.clone(), previous: i.checked_sub(1).map(|j| snaps[j].clone()) })
        .collect();
    Ok(VersionStats { entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(label: &str, t: u64) -> StrategyStep {
        StrategyStep { canonical_label: label.into(), token_count: t }
    }

    fn trace(id: &str, cluster: usize, sel: &str, labels: &[&str]) -> CanonicalTrace {
        CanonicalTrace {
            profile_id: id.into(),
            cluster_index: cluster,
            selected_label: sel.into(),
            steps: labels.iter().map(|l| step(l, 10)).collect(),
        }
    }

    #[test]
    fn read_twice_then_axis() {
        let g = Gateway::mock();
        let raw: Vec<String> = ["I read the question", "I read the question again", "I checked the y-axis"]
            .map(String::from)
            .to_vec();
        let steps = canonicalize_trace(&g, "mock-1", &StepVocabulary::builtin(), &raw, 100, 6).unwrap();
        let labels: Vec<_> = steps.iter().map(|s| s.canonical_label.as_str()).collect();
        assert_eq!(labels, ["understand_question", "check_chart_axis"]);
        assert_eq!(steps.iter().map(|s| s.token_count).sum::<u64>(), 100);
    }

    #[test]
    fn truncation_folds_tail() {
        let labels = ["a", "b", "c", "d", "e", "f", "g", "h", "i"];
        let steps: Vec<_> = labels.iter().enumerate().map(|(i, l)| step(l, i as u64 + 1)).collect();
        let out = merge_and_truncate(steps, 6);
        assert_eq!(out.len(), 6);
        assert_eq!(out[5], step("f", 6 + 7 + 8 + 9));
        assert_eq!(merge_and_truncate(vec![step("a", 3)], 6), vec![step("a", 3)]);
    }

    #[test]
    fn apportion_by_length() {
        let raw = vec!["aaa".to_string(), "a".to_string()];
        assert_eq!(apportion_tokens(&raw, 8), vec![6, 2]);
    }

    #[test]
    fn sankey_three_b_choosers() {
        let traces = [
            trace("s1", 0, "B", &["compare_options", "compare_axis"]),
            trace("s2", 0, "B", &["compare_options", "compare_axis"]),
            trace("s3", 1, "B", &["compare_options", "compare_percentages"]),
        ];
        let blocks = build_blocks(&traces.iter().collect::<Vec<_>>(), 0, &[]);
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].members.len(), 3);
        let sizes: Vec<_> = blocks[0].children.iter().map(|c| c.members.len()).collect();
        assert_eq!(sizes, [2, 1]);
        assert_eq!(blocks[0].children[0].terminal, BTreeMap::from([(0, 2)]));
        assert_eq!(blocks[0].children[1].terminal, BTreeMap::from([(1, 1)]));
    }

    #[test]
    fn top_k_ties_and_overflow() {
        let t = vec![
            trace("1", 0, "A", &["x"]),
            trace("2", 0, "A", &["x"]),
            trace("3", 0, "A", &["y"]),
            trace("4", 0, "A", &["b"]),
        ];
        assert_eq!(top_strategies(&t, 1), vec![Strategy { sequence: vec!["x".into()], frequency: 2 }]);
        let all = top_strategies(&t, 10);
        assert_eq!(all.len(), 3);
        assert_eq!(all[1].sequence, ["b"]);
    }

    #[test]
    fn rating_mean_example() {
        let r = |v| crate::students::Ratings {
            context_clarity: v,
            chart_complexity: v,
            data_difficulty: v,
            visual_encoding_complexity: v,
            overall_cognitive_challenge: v,
            hint_dependency: v,
        };
        let rs = [r(3), r(4), r(5)];
        assert_eq!(rating_means(rs.iter())[&RatingKey::ContextClarity], 4.0);
    }
}
