use serde::Deserialize;

const BUILTIN: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../config/step_vocabulary.json"
));

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct StepDef {
    pub label: String,
    pub description: String,
    #[serde(default)]
    pub keywords: Vec<String>,
}

/// Controlled vocabulary of canonical reasoning steps.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct StepVocabulary {
    pub steps: Vec<StepDef>,
    pub fallback: String,
}

impl Default for StepVocabulary {
    fn default() -> Self {
        Self::builtin()
    }
}

impl StepVocabulary {
    pub fn builtin() -> Self {
        serde_json::from_str(BUILTIN).expect("builtin step vocabulary parses")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.steps.iter().any(|s| s.label == label)
    }

    pub fn labels(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.label.as_str()).collect()
    }

    /// Keyword lookup: the label whose longest keyword occurring in `text`
    /// is longest overall; earlier labels win ties. Falls back to
    /// `self.fallback` when nothing matches.
    pub fn lookup(&self, text: &str) -> &str {
        let lower = text.to_lowercase();
        let mut best: Option<(&str, usize)> = None;
        for step in &self.steps {
            for kw in &step.keywords {
                if lower.contains(kw.as_str()) && best.is_none_or(|(_, len)| kw.len() > len) {
                    best = Some((step.label.as_str(), kw.len()));
                }
            }
        }
        best.map_or(self.fallback.as_str(), |(label, _)| label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_has_twenty_labels_and_valid_fallback() {
        let v = StepVocabulary::builtin();
        assert_eq!(v.steps.len(), 20);
        assert!(v.contains(&v.fallback));
        for label in ["understand_question", "check_chart_axis", "verify_bar_heights", "compare_percentages", "compare_options", "compare_axis"] {
            assert!(v.contains(label), "{label}");
        }
    }

    #[test]
    fn longest_keyword_wins() {
        let v = StepVocabulary::builtin();
        assert_eq!(v.lookup("I read the question"), "understand_question");
        assert_eq!(v.lookup("I read the question again"), "understand_question");
        assert_eq!(v.lookup("I checked the y-axis"), "check_chart_axis");
        assert_eq!(v.lookup("Then I compared the axis range against the bars"), "compare_axis");
        assert_eq!(v.lookup("zzz"), "examine_chart_data");
    }
}
