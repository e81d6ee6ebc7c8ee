//! Structural checks on a question. `ok` holds exactly when no check fires.

use serde::{Deserialize, Serialize};

use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationCode {
    NoCorrect,
    MultipleCorrect,
    DuplicateLabel,
    NoncontiguousLabels,
    OptionCountMismatch,
    RaggedCsv,
    ScriptDataMismatch,
    EmptyStem,
    EmptyExplanation,
}

impl ViolationCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ViolationCode::NoCorrect => "no_correct",
            ViolationCode::MultipleCorrect => "multiple_correct",
            ViolationCode::DuplicateLabel => "duplicate_label",
            ViolationCode::NoncontiguousLabels => "noncontiguous_labels",
            ViolationCode::OptionCountMismatch => "option_count_mismatch",
            ViolationCode::RaggedCsv => "ragged_csv",
            ViolationCode::ScriptDataMismatch => "script_data_mismatch",
            ViolationCode::EmptyStem => "empty_stem",
            ViolationCode::EmptyExplanation => "empty_explanation",
        }
    }
}

impl std::fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
    pub auto_pass: bool,
}

impl ValidationReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        let ok = violations.is_empty();
        Self { ok, violations, auto_pass: ok }
    }

    pub fn codes(&self) -> Vec<ViolationCode> {
        self.violations.iter().map(|v| v.code).collect()
    }

    pub fn summary(&self) -> String {
        self.violations
            .iter()
            .map(|v| format!("{}: {}", v.code, v.message))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// An option as produced by a model: the correct flag travels with it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DraftOption {
    pub label: String,
    pub text: String,
    pub is_correct: bool,
}

/// Everything the checks look at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Draft<'a> {
    pub stem: &'a str,
    pub options: Vec<DraftOption>,
    pub explanation: &'a str,
    pub chart_script: &'a str,
    pub chart_csv: &'a str,
    pub expected_options: usize,
}

pub(crate) fn expected_label(i: usize) -> String {
    let mut n = i;
    let mut s = String::new();
    loop {
        s.insert(0, (b'A' + (n % 26) as u8) as char);
        if n < 26 {
            break;
        }
        n = n / 26 - 1;
    }
    s
}

/// Header names of `csv`, read from the first record even if later rows are ragged.
fn headers(csv: &str) -> Vec<String> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(csv.as_bytes());
    reader
        .headers()
        .map(|h| h.iter().filter(|s| !s.is_empty()).map(str::to_string).collect())
        .unwrap_or_default()
}

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'$'
}

/// True if `needle` occurs in `hay` not flanked by identifier characters.
pub fn references_token(hay: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    let bytes = hay.as_bytes();
    hay.match_indices(needle).any(|(i, _)| {
        let before = i.checked_sub(1).map(|j| bytes[j]);
        let after = bytes.get(i + needle.len()).copied();
        !before.is_some_and(is_ident_byte) && !after.is_some_and(is_ident_byte)
    })
}

pub fn validate_draft(d: &Draft<'_>) -> ValidationReport {
    let mut v = Vec::new();
    let mut push = |code, message: String| v.push(Violation { code, message });

    match d.options.iter().filter(|o| o.is_correct).count() {
        0 => push(ViolationCode::NoCorrect, "no option is marked correct".into()),
        1 => {}
        n => push(ViolationCode::MultipleCorrect, format!("{n} options are marked correct")),
    }

    let mut seen = std::collections::BTreeSet::new();
    let dups: Vec<&str> = d
        .options
        .iter()
        .filter(|o| !seen.insert(o.label.as_str()))
        .map(|o| o.label.as_str())
        .collect();
    if !dups.is_empty() {
        push(ViolationCode::DuplicateLabel, format!("duplicate label(s) {}", dups.join(", ")));
    } else if let Some((i, o)) = d.options.iter().enumerate().find(|(i, o)| o.label != expected_label(*i)) {
        push(
            ViolationCode::NoncontiguousLabels,
            format!("option {} is labelled `{}`, expected `{}`", i + 1, o.label, expected_label(i)),
        );
    }

    if d.options.len() != d.expected_options {
        push(
            ViolationCode::OptionCountMismatch,
            format!("{} options, features call for {}", d.options.len(), d.expected_options),
        );
    }

    if let Err(e) = Table::parse(d.chart_csv) {
        push(ViolationCode::RaggedCsv, e.to_string());
    }

    let hs = headers(d.chart_csv);
    if !hs.iter().any(|h| references_token(d.chart_script, h)) {
        push(
            ViolationCode::ScriptDataMismatch,
            format!("chart script references none of the columns [{}]", hs.join(", ")),
        );
    }

    if d.stem.trim().is_empty() {
        push(ViolationCode::EmptyStem, "stem is empty".into());
    }
    if d.explanation.trim().is_empty() {
        push(ViolationCode::EmptyExplanation, "explanation is empty".into());
    }
    ValidationReport::from_violations(v)
}
