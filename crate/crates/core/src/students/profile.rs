use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

macro_rules! text_enum {
    ($(#[$meta:meta])* pub enum $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
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

text_enum! {
    pub enum Major {
        ComputerScience => "computer_science",
        Design => "design",
        Business => "business",
        Other => "other",
    }
}

text_enum! {
    pub enum EducationYear {
        Freshman => "freshman",
        Sophomore => "sophomore",
        Junior => "junior",
        Senior => "senior",
        Graduate => "graduate",
    }
}

text_enum! {
    /// The eleven 1-5 attributes: six learning traits then five knowledge points.
    pub enum OrdinalAttr {
        LogicalReasoning => "logical_reasoning",
        VisualProcessing => "visual_processing",
        CriticalThinking => "critical_thinking",
        WorkingMemory => "working_memory",
        AttentionToDetail => "attention_to_detail",
        Motivation => "motivation",
        BarLineReading => "bar_line_reading",
        ProportionCharts => "proportion_charts",
        AxisScaleInterpretation => "axis_scale_interpretation",
        MisleaderAwareness => "misleader_awareness",
        DataStatisticsLiteracy => "data_statistics_literacy",
    }
}

impl Major {
    fn phrase(&self) -> &'static str {
        match self {
            Major::ComputerScience => "computer science",
            Major::Design => "design",
            Major::Business => "business",
            Major::Other => "a field outside computing, design, and business",
        }
    }
}

impl EducationYear {
    /// Position in [0, 1] along freshman..graduate.
    pub fn scaled(&self) -> f64 {
        let idx = EducationYear::ALL.iter().position(|y| y == self).unwrap_or(0);
        idx as f64 / (EducationYear::ALL.len() - 1) as f64
    }
}

impl OrdinalAttr {
    pub const TRAITS: &'static [OrdinalAttr] = &[
        OrdinalAttr::LogicalReasoning,
        OrdinalAttr::VisualProcessing,
        OrdinalAttr::CriticalThinking,
        OrdinalAttr::WorkingMemory,
        OrdinalAttr::AttentionToDetail,
        OrdinalAttr::Motivation,
    ];
    pub const KNOWLEDGE: &'static [OrdinalAttr] = &[
        OrdinalAttr::BarLineReading,
        OrdinalAttr::ProportionCharts,
        OrdinalAttr::AxisScaleInterpretation,
        OrdinalAttr::MisleaderAwareness,
        OrdinalAttr::DataStatisticsLiteracy,
    ];

    pub fn is_trait(&self) -> bool {
        Self::TRAITS.contains(self)
    }

    fn phrase(&self) -> &'static str {
        match self {
            OrdinalAttr::LogicalReasoning => "logical reasoning",
            OrdinalAttr::VisualProcessing => "visual processing",
            OrdinalAttr::CriticalThinking => "critical thinking",
            OrdinalAttr::WorkingMemory => "working memory",
            OrdinalAttr::AttentionToDetail => "attention to detail",
            OrdinalAttr::Motivation => "motivation",
            OrdinalAttr::BarLineReading => "reading bar and line charts",
            OrdinalAttr::ProportionCharts => "proportion charts such as pies and treemaps",
            OrdinalAttr::AxisScaleInterpretation => "interpreting axes and scales",
            OrdinalAttr::MisleaderAwareness => "spotting misleading chart designs",
            OrdinalAttr::DataStatisticsLiteracy => "basic statistics",
        }
    }
}

/// A simulated learner.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudentProfile {
    pub id: String,
    pub age: u8,
    pub major: Major,
    pub education_year: EducationYear,
    pub prior_vis_coursework: bool,
    pub logical_reasoning: u8,
    pub visual_processing: u8,
    pub critical_thinking: u8,
    pub working_memory: u8,
    pub attention_to_detail: u8,
    pub motivation: u8,
    pub bar_line_reading: u8,
    pub proportion_charts: u8,
    pub axis_scale_interpretation: u8,
    pub misleader_awareness: u8,
    pub data_statistics_literacy: u8,
    pub persona_text: String,
}

impl StudentProfile {
    /// A profile with every ordinal at `level`; mostly useful in tests.
    pub fn uniform(id: &str, major: Major, level: u8) -> Self {
        let mut p = StudentProfile {
            id: id.to_string(),
            age: 20,
            major,
            education_year: EducationYear::Sophomore,
            prior_vis_coursework: false,
            logical_reasoning: level,
            visual_processing: level,
            critical_thinking: level,
            working_memory: level,
            attention_to_detail: level,
            motivation: level,
            bar_line_reading: level,
            proportion_charts: level,
            axis_scale_interpretation: level,
            misleader_awareness: level,
            data_statistics_literacy: level,
            persona_text: String::new(),
        };
        p.refresh_persona_text();
        p
    }

    pub fn level(&self, attr: OrdinalAttr) -> u8 {
        match attr {
            OrdinalAttr::LogicalReasoning => self.logical_reasoning,
            OrdinalAttr::VisualProcessing => self.visual_processing,
            OrdinalAttr::CriticalThinking => self.critical_thinking,
            OrdinalAttr::WorkingMemory => self.working_memory,
            OrdinalAttr::AttentionToDetail => self.attention_to_detail,
            OrdinalAttr::Motivation => self.motivation,
            OrdinalAttr::BarLineReading => self.bar_line_reading,
            OrdinalAttr::ProportionCharts => self.proportion_charts,
            OrdinalAttr::AxisScaleInterpretation => self.axis_scale_interpretation,
            OrdinalAttr::MisleaderAwareness => self.misleader_awareness,
            OrdinalAttr::DataStatisticsLiteracy => self.data_statistics_literacy,
        }
    }

    pub fn level_mut(&mut self, attr: OrdinalAttr) -> &mut u8 {
        match attr {
            OrdinalAttr::LogicalReasoning => &mut self.logical_reasoning,
            OrdinalAttr::VisualProcessing => &mut self.visual_processing,
            OrdinalAttr::CriticalThinking => &mut self.critical_thinking,
            OrdinalAttr::WorkingMemory => &mut self.working_memory,
            OrdinalAttr::AttentionToDetail => &mut self.attention_to_detail,
            OrdinalAttr::Motivation => &mut self.motivation,
            OrdinalAttr::BarLineReading => &mut self.bar_line_reading,
            OrdinalAttr::ProportionCharts => &mut self.proportion_charts,
            OrdinalAttr::AxisScaleInterpretation => &mut self.axis_scale_interpretation,
            OrdinalAttr::MisleaderAwareness => &mut self.misleader_awareness,
            OrdinalAttr::DataStatisticsLiteracy => &mut self.data_statistics_literacy,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for attr in OrdinalAttr::ALL {
            let v = self.level(*attr);
            if !(1..=5).contains(&v) {
                return Err(format!("{attr} = {v} outside 1..=5"));
            }
        }
        if self.persona_text.trim().is_empty() {
            return Err("persona_text is empty".into());
        }
        if !self.persona_text.contains(self.major.phrase()) {
            return Err("persona_text does not mention the major".into());
        }
        Ok(())
    }

    /// Regenerates `persona_text` from the attributes.
    pub fn refresh_persona_text(&mut self) {
        self.persona_text = synthesize_persona_text(self);
    }
}

fn join_phrases(items: &[&str]) -> String {
    match items {
        [] => String::new(),
        [one] => one.to_string(),
        [init @ .., last] => format!("{} and {}", init.join(", "), last),
    }
}

/// Deterministic first-person description built from the attributes.
pub fn synthesize_persona_text(p: &StudentProfile) -> String {
    let mut text = format!(
        "I am a {}-year-old {} student majoring in {}.",
        p.age,
        p.education_year.as_str(),
        p.major.phrase()
    );
    text.push_str(if p.prior_vis_coursework {
        " I have taken a data visualization course before."
    } else {
        " I have not taken a data visualization course."
    });

    let pick = |attrs: &[OrdinalAttr], pred: fn(u8) -> bool| -> Vec<&'static str> {
        attrs
            .iter()
            .filter(|a| pred(p.level(**a)))
            .map(|a| a.phrase())
            .collect()
    };
    let strong = pick(OrdinalAttr::TRAITS, |v| v >= 4);
    let weak = pick(OrdinalAttr::TRAITS, |v| v <= 2);
    if !strong.is_empty() {
        text.push_str(&format!(" My strengths are {}.", join_phrases(&strong)));
    }
    if !weak.is_empty() {
        text.push_str(&format!(" I struggle with {}.", join_phrases(&weak)));
    }
    if strong.is_empty() && weak.is_empty() {
        text.push_str(" My learning skills are about average.");
    }

    let confident = pick(OrdinalAttr::KNOWLEDGE, |v| v >= 4);
    let unsure = pick(OrdinalAttr::KNOWLEDGE, |v| v <= 2);
    if !confident.is_empty() {
        text.push_str(&format!(" I am confident with {}.", join_phrases(&confident)));
    }
    if !unsure.is_empty() {
        text.push_str(&format!(" I am unsure about {}.", join_phrases(&unsure)));
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn persona_text_mentions_major_and_extremes() {
        let mut p = StudentProfile::uniform("s1", Major::Design, 3);
        p.visual_processing = 5;
        p.working_memory = 1;
        p.misleader_awareness = 2;
        p.refresh_persona_text();
        p.validate().unwrap();
        assert!(p.persona_text.contains("design"));
        assert!(p.persona_text.contains("strengths are visual processing"));
        assert!(p.persona_text.contains("struggle with working memory"));
        assert!(p.persona_text.contains("unsure about spotting misleading"));
    }

    #[test]
    fn out_of_range_level_rejected() {
        let mut p = StudentProfile::uniform("s1", Major::Other, 3);
        p.motivation = 6;
        assert!(p.validate().unwrap_err().contains("motivation"));
    }

    #[test]
    fn attr_accessors_cover_all() {
        let mut p = StudentProfile::uniform("s1", Major::Business, 2);
        for (i, a) in OrdinalAttr::ALL.iter().enumerate() {
            *p.level_mut(*a) = (i % 5) as u8 + 1;
        }
        for (i, a) in OrdinalAttr::ALL.iter().enumerate() {
            assert_eq!(p.level(*a), (i % 5) as u8 + 1);
        }
        assert_eq!(OrdinalAttr::TRAITS.len() + OrdinalAttr::KNOWLEDGE.len(), 11);
    }
}
