//! The 14-feature description of a multiple-choice question.
//!
//! Features fall into four categories:
//!
//! | category   | features |
//! |------------|----------|
//! | question   | `cognitive_complexity` (Bloom level 1-6), `context_domain`, `context_richness`, `difficulty_target` |
//! | chart      | `chart_type`, `data_complexity`, `color_scheme`, `misleader`, `embellishment_level` |
//! | distractor | `distractor_count`, `plausibility`, `distractor_strategy` |
//! | knowledge  | `knowledge_points`, `hint_presence` |
//!
//! Ordinals default to 3, `distractor_count` to 3 and `hint_presence` to false.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid feature `{field}`: {reason}")]
pub struct FeatureError {
    pub field: &'static str,
    pub reason: String,
}

macro_rules! string_enum {
    (
        $(#[$meta:meta])*
        pub enum $name:ident { $($variant:ident => $text:literal),+ $(,)? }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(&self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!("unknown {} `{}`", stringify!($name), other)),
                }
            }
        }
    };
}

string_enum! {
    /// The ten chart families covered by the template corpus.
    pub enum ChartType {
        Bar => "bar",
        StackedBar => "stacked_bar",
        Line => "line",
        Area => "area",
        Pie => "pie",
        Scatterplot => "scatterplot",
        Bubble => "bubble",
        Histogram => "histogram",
        Choropleth => "choropleth",
        Treemap => "treemap",
    }
}

string_enum! {
    /// Deliberate design flaws a question can ask students to notice.
    pub enum Misleader {
        TruncatedAxis => "truncated_axis",
        InappropriateScaleRange => "inappropriate_scale_range",
        InvertedAxis => "inverted_axis",
        NonLinearScale => "non_linear_scale",
        CherryPicking => "cherry_picking",
        MisleadingColor => "misleading_color",
        MissingBaseline => "missing_baseline",
    }
}

string_enum! {
    /// Visualization tasks a question can exercise.
    pub enum KnowledgePoint {
        RetrieveValue => "retrieve_value",
        FindExtremum => "find_extremum",
        DetermineRange => "determine_range",
        CompareValues => "compare_values",
        FindTrend => "find_trend",
        FindCorrelation => "find_correlation",
        MakeProportionJudgment => "make_proportion_judgment",
        IdentifyMisleader => "identify_misleader",
    }
}

string_enum! {
    pub enum ColorScheme {
        Categorical => "categorical",
        Sequential => "sequential",
        Diverging => "diverging",
        Auto => "auto",
    }
}

string_enum! {
    pub enum DistractorStrategy {
        NearValue => "near_value",
        WrongEncoding => "wrong_encoding",
        AxisConfusion => "axis_confusion",
        Mixed => "mixed",
    }
}

/// Full feature description of a question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McqFeatureSet {
    pub cognitive_complexity: u8,
    pub context_domain: String,
    pub context_richness: u8,
    pub difficulty_target: u8,
    pub chart_type: Option<ChartType>,
    pub data_complexity: u8,
    pub color_scheme: ColorScheme,
    pub misleader: Option<Misleader>,
    pub embellishment_level: u8,
    pub distractor_count: u8,
    pub plausibility: u8,
    pub distractor_strategy: DistractorStrategy,
    pub knowledge_points: BTreeSet<KnowledgePoint>,
    pub hint_presence: bool,
}

impl Default for McqFeatureSet {
    fn default() -> Self {
        Self {
            cognitive_complexity: 3,
            context_domain: "general".to_string(),
            context_richness: 3,
            difficulty_target: 3,
            chart_type: None,
            data_complexity: 3,
            color_scheme: ColorScheme::Auto,
            misleader: None,
            embellishment_level: 3,
            distractor_count: 3,
            plausibility: 3,
            distractor_strategy: DistractorStrategy::Mixed,
            knowledge_points: BTreeSet::from([KnowledgePoint::RetrieveValue]),
            hint_presence: false,
        }
    }
}

fn check_range(field: &'static str, value: u8, lo: u8, hi: u8) -> Result<(), FeatureError> {
    if (lo..=hi).contains(&value) {
        Ok(())
    } else {
        Err(FeatureError {
            field,
            reason: format!("{value} outside {lo}..={hi}"),
        })
    }
}

impl McqFeatureSet {
    pub fn validate(&self) -> Result<(), FeatureError> {
        check_range("cognitive_complexity", self.cognitive_complexity, 1, 6)?;
        check_range("context_richness", self.context_richness, 1, 5)?;
        check_range("difficulty_target", self.difficulty_target, 1, 5)?;
        check_range("data_complexity", self.data_complexity, 1, 5)?;
        check_range("embellishment_level", self.embellishment_level, 1, 5)?;
        check_range("distractor_count", self.distractor_count, 1, 5)?;
        check_range("plausibility", self.plausibility, 1, 5)?;
        if self.knowledge_points.is_empty() {
            return Err(FeatureError {
                field: "knowledge_points",
                reason: "must not be empty".into(),
            });
        }
        Ok(())
    }

    /// Number of options a question with these features carries.
    pub fn option_count(&self) -> usize {
        self.distractor_count as usize + 1
    }

    /// Applies `deltas` on top of `self`; fields absent from `deltas` are kept.
    pub fn with_deltas(&self, deltas: &FeatureDeltas) -> McqFeatureSet {
        let mut out = self.clone();
        macro_rules! take {
            ($($f:ident),+) => { $(if let Some(v) = &deltas.$f { out.$f = v.clone(); })+ };
        }
        take!(
            cognitive_complexity,
            context_domain,
            context_richness,
            difficulty_target,
            chart_type,
            data_complexity,
            color_scheme,
            misleader,
            embellishment_level,
            distractor_count,
            plausibility,
            distractor_strategy,
            knowledge_points,
            hint_presence
        );
        out
    }

    /// Names of the features whose values differ between `self` and `other`.
    pub fn changed_fields(&self, other: &McqFeatureSet) -> Vec<&'static str> {
        let mut changed = Vec::new();
        macro_rules! cmp {
            ($($f:ident),+) => { $(if self.$f != other.$f { changed.push(stringify!($f)); })+ };
        }
        cmp!(
            cognitive_complexity,
            context_domain,
            context_richness,
            difficulty_target,
            chart_type,
            data_complexity,
            color_scheme,
            misleader,
            embellishment_level,
            distractor_count,
            plausibility,
            distractor_strategy,
            knowledge_points,
            hint_presence
        );
        changed
    }
}

/// Accepts both "absent" and "explicit null" for doubly optional fields.
fn double_option<'de, T, D>(de: D) -> Result<Option<Option<T>>, D::Error>
where
    T: Deserialize<'de>,
    D: Deserializer<'de>,
{
    Option::<T>::deserialize(de).map(Some)
}

/// A partial feature set. Used both for instructor overrides and for
/// revision deltas. `chart_type` and `misleader` use `Some(None)` to clear.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureDeltas {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cognitive_complexity: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_domain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_richness: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty_target: Option<u8>,
    #[serde(
        default,
        deserialize_with = "double_option",
        skip_serializing_if = "Option::is_none"
    )]
    pub chart_type: Option<Option<ChartType>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_complexity: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color_scheme: Option<ColorScheme>,
    #[serde(
        default,
        deserialize_with = "double_option",
        skip_serializing_if = "Option::is_none"
    )]
    pub misleader: Option<Option<Misleader>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embellishment_level: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distractor_count: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plausibility: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distractor_strategy: Option<DistractorStrategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knowledge_points: Option<BTreeSet<KnowledgePoint>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hint_presence: Option<bool>,
}

impl FeatureDeltas {
    pub fn is_empty(&self) -> bool {
        *self == FeatureDeltas::default()
    }

    /// Layers `other` over `self`: fields set in `other` win.
    pub fn overlay(&self, other: &FeatureDeltas) -> FeatureDeltas {
        let mut out = self.clone();
        macro_rules! take {
            ($($f:ident),+) => { $(if other.$f.is_some() { out.$f = other.$f.clone(); })+ };
        }
        take!(
            cognitive_complexity,
            context_domain,
            context_richness,
            difficulty_target,
            chart_type,
            data_complexity,
            color_scheme,
            misleader,
            embellishment_level,
            distractor_count,
            plausibility,
            distractor_strategy,
            knowledge_points,
            hint_presence
        );
        out
    }
}
