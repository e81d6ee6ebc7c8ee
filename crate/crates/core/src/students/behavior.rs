//! Mapping from trait levels to reasoning dispositions embedded in
//! simulation prompts. Shipped as `config/behavior_contract.json`.

use serde::Deserialize;

use super::profile::{OrdinalAttr, StudentProfile};

const BUILTIN: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../config/behavior_contract.json"
));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Ge,
    Le,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct BehaviorRule {
    pub attribute: OrdinalAttr,
    pub op: Comparison,
    pub threshold: u8,
    pub disposition: String,
    #[serde(default)]
    pub prefers: Vec<String>,
}

impl BehaviorRule {
    pub fn applies(&self, profile: &StudentProfile) -> bool {
        let level = profile.level(self.attribute);
        match self.op {
            Comparison::Ge => level >= self.threshold,
            Comparison::Le => level <= self.threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct BehaviorContract {
    pub rules: Vec<BehaviorRule>,
}

impl Default for BehaviorContract {
    fn default() -> Self {
        Self::builtin()
    }
}

impl BehaviorContract {
    pub fn builtin() -> Self {
        serde_json::from_str(BUILTIN).expect("builtin behaviour contract parses")
    }

    pub fn dispositions<'a>(&'a self, profile: &'a StudentProfile) -> impl Iterator<Item = &'a BehaviorRule> + 'a {
        self.rules.iter().filter(move |r| r.applies(profile))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::students::profile::Major;

    #[test]
    fn rules_fire_on_thresholds() {
        let contract = BehaviorContract::builtin();
        let mut p = StudentProfile::uniform("s", Major::Design, 3);
        assert_eq!(contract.dispositions(&p).count(), 0);
        p.visual_processing = 4;
        p.misleader_awareness = 2;
        let fired: Vec<_> = contract.dispositions(&p).map(|r| r.attribute).collect();
        assert_eq!(fired, vec![OrdinalAttr::VisualProcessing, OrdinalAttr::MisleaderAwareness]);
    }
}
