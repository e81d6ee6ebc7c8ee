//! Seeded generators behind the mock provider. Each one reads the JSON
//! context block of the prompt and emits output valid for its schema.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use super::{context_block, LlmRequest};
use crate::reasoning::StepVocabulary;
use crate::table::Table;

pub(crate) fn generate(request: &LlmRequest, rng: &mut ChaCha8Rng) -> Result<Value, String> {
    let ctx = context_block(&request.user_prompt).unwrap_or(Value::Null);
    match request.response_schema_id.as_str() {
        "feature_extraction" => Ok(extract_features(&ctx)),
        "chart_customization" => customize_chart(&ctx, rng),
        "qa_generation" => generate_qa(&ctx["qa_template"], str_of(&ctx["csv"]), &ctx["features"], rng),
        "question_revision" => revise(&ctx, rng),
        "profile_batch" => Ok(profile_batch(&ctx, rng)),
        "student_response" => student_response(&ctx, &request.metadata, rng),
        "trace_canonicalization" => Ok(canonicalize(&ctx)),
        "embedding" => Ok(json!({ "vector": hash_embedding(&request.user_prompt, request.seed.unwrap_or(0)) })),
        other => Err(format!("no procedural generator for schema `{other}`")),
    }
}

fn str_of(v: &Value) -> &str {
    v.as_str().unwrap_or_default()
}

fn u8_of(v: &Value, default: u8) -> u8 {
    v.as_u64().map_or(default, |x| x.min(255) as u8)
}

// ---------------------------------------------------------------- features

fn extract_features(ctx: &Value) -> Value {
    let text = str_of(&ctx["text"]).to_lowercase();
    let mut out = Map::new();

    const CHARTS: &[(&str, &str)] = &[
        ("stacked bar", "stacked_bar"),
        ("scatter", "scatterplot"),
        ("bubble", "bubble"),
        ("histogram", "histogram"),
        ("choropleth", "choropleth"),
        ("treemap", "treemap"),
        ("pie", "pie"),
        ("area chart", "area"),
        ("line chart", "line"),
        ("line graph", "line"),
        ("bar chart", "bar"),
        ("bar graph", "bar"),
    ];
    if let Some((_, ct)) = CHARTS.iter().find(|(kw, _)| text.contains(kw)) {
        out.insert("chart_type".into(), json!(ct));
    }

    const MISLEADERS: &[(&str, &str)] = &[
        ("truncat", "truncated_axis"),
        ("non-zero", "inappropriate_scale_range"),
        ("scale range", "inappropriate_scale_range"),
        ("invert", "inverted_axis"),
        ("logarithm", "non_linear_scale"),
        ("non-linear", "non_linear_scale"),
        ("cherry", "cherry_picking"),
        ("misleading color", "misleading_color"),
        ("baseline", "missing_baseline"),
    ];
    let misleader = MISLEADERS.iter().find(|(kw, _)| text.contains(kw)).map(|(_, m)| *m);
    if let Some(m) = misleader {
        out.insert("misleader".into(), json!(m));
    }

    const KNOWLEDGE: &[(&str, &str)] = &[
        ("retriev", "retrieve_value"),
        ("extrem", "find_extremum"),
        ("highest", "find_extremum"),
        ("lowest", "find_extremum"),
        ("range", "determine_range"),
        ("compar", "compare_values"),
        ("trend", "find_trend"),
        ("correlat", "find_correlation"),
        ("proportion", "make_proportion_judgment"),
        ("percent", "make_proportion_judgment"),
        ("mislead", "identify_misleader"),
    ];
    let mut kps: Vec<&str> = KNOWLEDGE
        .iter()
        .filter(|(kw, _)| text.contains(kw))
        .map(|(_, k)| *k)
        .collect();
    if misleader.is_some() {
        kps.push("identify_misleader");
    }
    kps.sort();
    kps.dedup();
    if !kps.is_empty() {
        out.insert("knowledge_points".into(), json!(kps));
    }

    let hard = ["overly straightforward", "not too easy", "challenging", "difficult", "tricky", "harder"];
    let easy = ["easy", "simple", "straightforward", "introductory"];
    if text.contains("very difficult") || text.contains("very hard") {
        out.insert("difficulty_target".into(), json!(5));
    } else if hard.iter().any(|k| text.contains(k)) {
        out.insert("difficulty_target".into(), json!(4));
    } else if easy.iter().any(|k| text.contains(k)) {
        out.insert("difficulty_target".into(), json!(2));
    }

    const NUMBERS: &[(&str, u8)] = &[("one", 1), ("two", 2), ("three", 3), ("four", 4), ("five", 5)];
    let words: Vec<&str> = text.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).collect();
    for pair in words.windows(2) {
        let n = pair[0]
            .parse::<u8>()
            .ok()
            .or_else(|| NUMBERS.iter().find(|(w, _)| *w == pair[0]).map(|(_, n)| *n));
        if let Some(n) = n {
            if pair[1].starts_with("distractor") && (1..=5).contains(&n) {
                out.insert("distractor_count".into(), json!(n));
            } else if pair[1].starts_with("option") && (2..=6).contains(&n) {
                out.insert("distractor_count".into(), json!(n - 1));
            }
        }
    }

    if text.contains("no hint") || text.contains("without hint") {
        out.insert("hint_presence".into(), json!(false));
    } else if text.contains("hint") {
        out.insert("hint_presence".into(), json!(true));
    }
    if text.contains("evaluat") {
        out.insert("cognitive_complexity".into(), json!(5));
    } else if text.contains("analy") {
        out.insert("cognitive_complexity".into(), json!(4));
    }
    Value::Object(out)
}

// ------------------------------------------------------------------ charts

const STRUCTURAL_COLUMNS: &[&str] = &["row", "col", "bin_start", "bin_end", "year"];
const PALETTE: &[&str] = &["#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#9c755f"];

/// Scales numeric, non-structural cells by a random factor in [0.85, 1.15],
/// keeping each cell's decimal places.
fn vary_csv(csv: &str, rng: &mut ChaCha8Rng) -> String {
    let Ok(mut table) = Table::parse(csv) else {
        return csv.to_string();
    };
    let skip: Vec<bool> = table
        .headers
        .iter()
        .map(|h| STRUCTURAL_COLUMNS.contains(&h.as_str()))
        .collect();
    for row in &mut table.rows {
        for (cell, skip) in row.iter_mut().zip(&skip) {
            if *skip {
                continue;
            }
            if let Ok(x) = cell.parse::<f64>() {
                let decimals = cell.split_once('.').map_or(0, |(_, frac)| frac.len());
                let scaled = x * rng.gen_range(0.85..1.15);
                *cell = format!("{scaled:.decimals$}");
            }
        }
    }
    table.to_csv()
}

fn recolor(script: &str, rng: &mut ChaCha8Rng) -> String {
    let bytes = script.as_bytes();
    for i in 0..bytes.len().saturating_sub(6) {
        if bytes[i] == b'#' && bytes[i + 1..i + 7].iter().all(u8::is_ascii_hexdigit) {
            let colour = PALETTE.choose(rng).copied().unwrap_or("#4e79a7");
            return format!("{}{}{}", &script[..i], colour, &script[i + 7..]);
        }
    }
    script.to_string()
}

fn customize_chart(ctx: &Value, rng: &mut ChaCha8Rng) -> Result<Value, String> {
    let template = &ctx["template"];
    let script = str_of(&template["chart_script"]);
    let csv = str_of(&template["sample_csv"]);
    if script.is_empty() || csv.is_empty() {
        return Err("context lacks a template".into());
    }
    Ok(json!({
        "chart_script": recolor(script, rng),
        "csv": vary_csv(csv, rng),
        "notes": "randomized colors and data values"
    }))
}

// --------------------------------------------------------------------- QA

const GENERIC_DISTRACTORS: &[&str] = &[
    "The chart does not provide enough information",
    "All values are about the same",
    "None of the above",
    "It cannot be determined without the raw data",
    "The difference is negligible",
];

fn label_for(i: usize) -> String {
    char::from(b'A' + i as u8).to_string()
}

struct DataSummary {
    labels: Vec<String>,
    measure: String,
    correct: String,
}

fn summarize_csv(csv: &str) -> DataSummary {
    let Ok(table) = Table::parse(csv) else {
        return DataSummary {
            labels: vec![],
            measure: "value".into(),
            correct: "Not determinable".into(),
        };
    };
    let numeric = |c: usize| table.rows.iter().all(|r| r[c].parse::<f64>().is_ok());
    let label_col = (0..table.headers.len()).find(|c| !numeric(*c));
    let value_col = (0..table.headers.len())
        .find(|c| numeric(*c) && !STRUCTURAL_COLUMNS.contains(&table.headers[*c].as_str()));
    let labels: Vec<String> = match label_col {
        Some(c) => table.rows.iter().map(|r| r[c].clone()).collect(),
        None => table.rows.iter().map(|r| r[0].clone()).collect(),
    };
    let measure = value_col.map_or("value".into(), |c| table.headers[c].replace('_', " "));
    let correct = match value_col {
        Some(c) => table
            .rows
            .iter()
            .zip(&labels)
            .max_by(|(a, _), (b, _)| {
                let x: f64 = a[c].parse().unwrap_or(0.0);
                let y: f64 = b[c].parse().unwrap_or(0.0);
                x.total_cmp(&y)
            })
            .map(|(_, l)| l.clone()),
        None => labels.first().cloned(),
    }
    .unwrap_or_else(|| "Not determinable".into());
    DataSummary {
        labels,
        measure,
        correct,
    }
}

fn fill(template: &str, values: &BTreeMap<String, String>) -> String {
    let mut out = template.to_string();
    for (k, v) in values {
        out = out.replace(&format!("{{{{{k}}}}}"), v);
    }
    out
}

fn distractor_pool(summary: &DataSummary, correct: &str) -> Vec<String> {
    let mut pool: Vec<String> = summary.labels.iter().filter(|l| *l != correct).cloned().collect();
    pool.extend(GENERIC_DISTRACTORS.iter().map(|s| s.to_string()));
    pool.dedup();
    pool
}

fn generate_qa(qa: &Value, csv: &str, features: &Value, rng: &mut ChaCha8Rng) -> Result<Value, String> {
    let stem_template = str_of(&qa["stem_template"]);
    if stem_template.is_empty() {
        return Err("context lacks a QA template".into());
    }
    let n_options = u8_of(&features["distractor_count"], 3) as usize + 1;
    let summary = summarize_csv(csv);
    let correct = summary.correct.clone();
    let distractors: Vec<String> = distractor_pool(&summary, &correct).into_iter().take(n_options - 1).collect();

    let mut values = BTreeMap::new();
    values.insert("correct".to_string(), correct.clone());
    for (i, d) in distractors.iter().enumerate() {
        values.insert(format!("distractor_{}", i + 1), d.clone());
    }
    let mut cursor = 0usize;
    for name in qa["placeholders"].as_array().into_iter().flatten().filter_map(Value::as_str) {
        if values.contains_key(name) {
            continue;
        }
        let value = if ["measure", "value", "unit", "series"].iter().any(|k| name.contains(k)) || name.ends_with("_label") {
            summary.measure.clone()
        } else if name.contains("axis") {
            "a non-zero value".to_string()
        } else {
            let v = summary.labels.get(cursor % summary.labels.len().max(1)).cloned().unwrap_or_default();
            cursor += 1;
            v
        };
        values.insert(name.to_string(), value);
    }

    let mut stem = fill(stem_template, &values);
    if features["hint_presence"].as_bool().unwrap_or(false) {
        stem.push_str(" Hint: look closely at the axis before comparing.");
    }
    let mut texts: Vec<(String, bool)> = std::iter::once((correct, true))
        .chain(distractors.into_iter().map(|d| (d, false)))
        .collect();
    texts.shuffle(rng);
    let options: Vec<Value> = texts
        .into_iter()
        .enumerate()
        .map(|(i, (text, is_correct))| json!({ "label": label_for(i), "text": text, "is_correct": is_correct }))
        .collect();
    Ok(json!({
        "stem": stem,
        "options": options,
        "explanation": fill(str_of(&qa["explanation_template"]), &values),
    }))
}

fn revise(ctx: &Value, rng: &mut ChaCha8Rng) -> Result<Value, String> {
    let prev = &ctx["previous"];
    let prompt = str_of(&ctx["revision_prompt"]).to_lowercase();
    let features = &ctx["features"];
    let changed: Vec<&str> = ctx["changed_features"].as_array().into_iter().flatten().filter_map(Value::as_str).collect();
    let mut summary = Vec::new();

    let (script, csv, mut stem, mut options, mut explanation);
    if let Some(reference) = ctx.get("reference_template").filter(|v| v.is_object()) {
        script = recolor(str_of(&reference["chart_script"]), rng);
        csv = vary_csv(str_of(&reference["sample_csv"]), rng);
        let qa = generate_qa(&reference["qa_template"], &csv, features, rng)?;
        stem = str_of(&qa["stem"]).to_string();
        options = qa["options"].as_array().cloned().unwrap_or_default();
        explanation = str_of(&qa["explanation"]).to_string();
        summary.push("switched to a new chart template".to_string());
    } else {
        script = str_of(&prev["chart_script"]).to_string();
        csv = if prompt.contains("data") || changed.contains(&"data_complexity") {
            summary.push("regenerated the data values".to_string());
            vary_csv(str_of(&prev["csv"]), rng)
        } else {
            str_of(&prev["csv"]).to_string()
        };
        stem = str_of(&prev["stem"]).to_string();
        explanation = str_of(&prev["explanation"]).to_string();
        options = resize_options(prev, u8_of(&features["distractor_count"], 3) as usize + 1);
    }

    let wants_hint = prompt.contains("hint") || (changed.contains(&"hint_presence") && features["hint_presence"] == json!(true));
    if wants_hint && !stem.contains("Hint:") {
        stem.push_str(" Hint: check where the axis starts before comparing.");
        summary.push("added a hint to the stem".to_string());
    }
    if !prompt.trim().is_empty() && summary.is_empty() {
        explanation.push_str(" (Revised per instructor request.)");
        summary.push("adjusted the explanation".to_string());
    }
    if changed.contains(&"distractor_count") || changed.contains(&"plausibility") {
        summary.push("updated the distractors".to_string());
    }
    for (i, opt) in options.iter_mut().enumerate() {
        opt["label"] = json!(label_for(i));
    }
    Ok(json!({
        "chart_script": script,
        "csv": csv,
        "stem": stem,
        "options": options,
        "explanation": explanation,
        "change_summary": summary.join("; "),
    }))
}

fn resize_options(prev: &Value, target: usize) -> Vec<Value> {
    let correct_label = str_of(&prev["correct_label"]);
    let prev_opts = prev["options"].as_array().cloned().unwrap_or_default();
    let correct_idx = prev_opts.iter().position(|o| o["label"] == json!(correct_label)).unwrap_or(0);
    let correct_text = prev_opts.get(correct_idx).map(|o| str_of(&o["text"]).to_string()).unwrap_or_default();
    let mut distractors: Vec<String> = prev_opts
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != correct_idx)
        .map(|(_, o)| str_of(&o["text"]).to_string())
        .collect();
    for extra in GENERIC_DISTRACTORS {
        if distractors.len() + 1 >= target {
            break;
        }
        if !distractors.iter().any(|d| d == extra) && *extra != correct_text {
            distractors.push(extra.to_string());
        }
    }
    distractors.truncate(target.saturating_sub(1));
    let position = correct_idx.min(distractors.len());
    let mut texts: Vec<(String, bool)> = distractors.into_iter().map(|d| (d, false)).collect();
    texts.insert(position, (correct_text, true));
    texts
        .into_iter()
        .map(|(text, is_correct)| json!({ "label": "", "text": text, "is_correct": is_correct }))
        .collect()
}

// --------------------------------------------------------------- profiles

const MAJORS: &[&str] = &["computer_science", "design", "business", "other"];
const YEARS: &[&str] = &["freshman", "sophomore", "junior", "senior", "graduate"];
const LEVEL_ATTRS: &[&str] = &[
    "logical_reasoning",
    "visual_processing",
    "critical_thinking",
    "working_memory",
    "attention_to_detail",
    "motivation",
    "bar_line_reading",
    "proportion_charts",
    "axis_scale_interpretation",
    "misleader_awareness",
    "data_statistics_literacy",
];

fn major_bias(major: &str, attr: &str) -> i32 {
    match (major, attr) {
        ("computer_science", "logical_reasoning" | "data_statistics_literacy") => 1,
        ("design", "visual_processing" | "misleader_awareness") => 1,
        ("design", "data_statistics_literacy") => -1,
        ("business", "proportion_charts" | "bar_line_reading") => 1,
        _ => 0,
    }
}

fn profile_batch(ctx: &Value, rng: &mut ChaCha8Rng) -> Value {
    let count = ctx["count"].as_u64().unwrap_or(0) as usize;
    let slots = ctx["slots"].as_array().cloned().unwrap_or_default();
    let ranges = &ctx["level_ranges"];
    let (age_lo, age_hi) = match ctx["age_range"].as_array() {
        Some(r) if r.len() == 2 => (u8_of(&r[0], 17), u8_of(&r[1], 40)),
        _ => (17, 40),
    };
    let profiles: Vec<Value> = (0..count)
        .map(|i| {
            let slot = slots.get(i).cloned().unwrap_or(Value::Null);
            let major = slot["major"].as_str().map(str::to_string).unwrap_or_else(|| {
                // Skewed towards computer science, like an intro vis course.
                let w = rng.gen_range(0..10);
                MAJORS[match w { 0..=3 => 0, 4..=5 => 1, 6..=7 => 2, _ => 3 }].to_string()
            });
            let year = slot["education_year"]
                .as_str()
                .map(str::to_string)
                .unwrap_or_else(|| YEARS[rng.gen_range(0..YEARS.len())].to_string());
            let year_idx = YEARS.iter().position(|y| *y == year).unwrap_or(0) as u8;
            let base_age = if year_idx == 4 { 23 } else { 18 + year_idx };
            let age = (base_age + rng.gen_range(0..3)).clamp(age_lo, age_hi);
            let prior = slot["prior_vis_coursework"].as_bool().unwrap_or_else(|| rng.gen_bool(0.3));
            let mut p = Map::new();
            p.insert("age".into(), json!(age));
            p.insert("major".into(), json!(major));
            p.insert("education_year".into(), json!(year));
            p.insert("prior_vis_coursework".into(), json!(prior));
            for attr in LEVEL_ATTRS {
                let roll = (rng.gen_range(1..=5) + rng.gen_range(1..=5) + 1) / 2;
                let mut level = (roll + major_bias(&major, attr) + i32::from(prior && attr.contains("aware"))).clamp(1, 5);
                if let Some(r) = ranges[attr].as_array().filter(|r| r.len() == 2) {
                    level = level.clamp(u8_of(&r[0], 1) as i32, u8_of(&r[1], 5) as i32);
                }
                p.insert(attr.to_string(), json!(level));
            }
            Value::Object(p)
        })
        .collect();
    json!({ "profiles": profiles })
}

// ---------------------------------------------------------------- answers

/// Phrase variants per vocabulary label; each maps back to its label
/// under [`StepVocabulary::lookup`].
pub(crate) const STEP_PHRASES: &[(&str, &[&str])] = &[
    ("understand_question", &["I read the question carefully to see what it asks.", "First I reread the question stem to understand the task."]),
    ("understand_options", &["I read through the options one by one.", "I look at the options to see which answers are possible."]),
    ("identify_chart_type", &["I noticed what type of chart this is.", "I recognize the chart as a familiar kind of chart."]),
    ("read_legend", &["I checked the legend to see what the colors represent."]),
    ("check_chart_axis", &["I checked the x-axis and y-axis labels.", "I looked at the tick marks on the y-axis."]),
    ("compare_axis", &["I compared the axis range against the plotted values."]),
    ("check_scale", &["I checked whether the scale is linear or logarithmic.", "I looked for a truncated or inverted scale."]),
    ("examine_chart_data", &["I scan the chart to get an overview.", "I looked at the data points in the chart."]),
    ("locate_data_point", &["I tried to locate the mark mentioned in the question.", "I located the relevant item on the chart."]),
    ("estimate_value", &["I estimated the value from its position."]),
    ("verify_bar_heights", &["I compared the bar heights to see which is taller.", "I checked which bars look taller or shorter."]),
    ("compare_percentages", &["I compared the percentages for each part.", "I judged the proportion each part takes up."]),
    ("compute_difference", &["I calculated the difference between the two values.", "I tried to compute the total from the values."]),
    ("identify_trend", &["I followed the trend across the chart.", "I checked whether the values are increasing or decreasing."]),
    ("find_extremum", &["I looked for the highest and lowest values.", "I searched for the largest item."]),
    ("recall_knowledge", &["I recall a rule of thumb about reading charts."]),
    ("check_misleader", &["I considered whether the chart design is misleading.", "I wondered if the chart might distort the comparison."]),
    ("compare_options", &["I started by comparing the options against each other.", "I weighed the options against the chart."]),
    ("eliminate_options", &["I ruled out the options that did not fit.", "I tried to eliminate the implausible answers."]),
    ("select_answer", &["So I chose my answer.", "I will go with this option."]),
];

const ELABORATIONS: &[&str] = &[
    "",
    " This took a moment because the values are close together.",
    " I went back and forth on this part before moving on.",
    " It seemed clear enough.",
];

fn phrase(label: &str, rng: &mut ChaCha8Rng) -> String {
    let variants = STEP_PHRASES
        .iter()
        .find(|(l, _)| *l == label)
        .map(|(_, v)| *v)
        .unwrap_or(&["I looked at the data points in the chart."]);
    let base = variants.choose(rng).copied().unwrap_or_default();
    let extra = ELABORATIONS.choose(rng).copied().unwrap_or_default();
    format!("{base}{extra}")
}

fn student_response(ctx: &Value, meta: &BTreeMap<String, Value>, rng: &mut ChaCha8Rng) -> Result<Value, String> {
    let p = &ctx["profile"];
    let level = |k: &str| u8_of(&p[k], 3) as f64;
    let labels: Vec<String> = ctx["question"]["options"]
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|o| o["label"].as_str().map(str::to_string))
        .collect();
    if labels.is_empty() {
        return Err("question has no options".into());
    }
    let difficulty = meta.get("difficulty").and_then(Value::as_f64).unwrap_or(3.0);
    let misleader = meta.get("misleader").and_then(Value::as_bool).unwrap_or(false);

    let traits = ["logical_reasoning", "visual_processing", "critical_thinking", "working_memory", "attention_to_detail", "motivation"];
    let knowledge = ["bar_line_reading", "proportion_charts", "axis_scale_interpretation", "misleader_awareness", "data_statistics_literacy"];
    let mean = |ks: &[&str]| ks.iter().map(|k| level(k)).sum::<f64>() / ks.len() as f64;
    let mut ability = 0.5 * mean(&traits) + 0.5 * mean(&knowledge);
    if misleader {
        ability = 0.5 * ability + 0.5 * level("misleader_awareness");
    }
    let p_correct = (1.0 / (1.0 + (-(1.3 * (ability - difficulty) + 0.6)).exp())).clamp(0.05, 0.97);

    let selected = match meta.get("correct_label").and_then(Value::as_str) {
        Some(correct) if labels.iter().any(|l| l == correct) => {
            if rng.gen_bool(p_correct) || labels.len() == 1 {
                correct.to_string()
            } else {
                let others: Vec<&String> = labels.iter().filter(|l| *l != correct).collect();
                others[rng.gen_range(0..others.len())].clone()
            }
        }
        _ => labels[rng.gen_range(0..labels.len())].clone(),
    };

    let visual_first = level("visual_processing") >= level("logical_reasoning");
    let mut steps: Vec<&str> = if visual_first {
        vec!["examine_chart_data", if rng.gen_bool(0.5) { "verify_bar_heights" } else { "locate_data_point" }, "understand_question"]
    } else {
        vec!["understand_question", "understand_options", "locate_data_point"]
    };
    if level("attention_to_detail") >= 4.0 || level("misleader_awareness") >= 4.0 {
        steps.insert(1, "check_chart_axis");
    }
    if level("axis_scale_interpretation") >= 4.0 && misleader {
        steps.push("check_scale");
    }
    if level("critical_thinking") >= 4.0 && (misleader || rng.gen_bool(0.3)) {
        steps.push("check_misleader");
    }
    if level("logical_reasoning") >= 4.0 {
        steps.push(if rng.gen_bool(0.5) { "compute_difference" } else { "compare_options" });
    } else if rng.gen_bool(0.3) {
        steps.push("eliminate_options");
    }
    if level("proportion_charts") >= 4.0 && rng.gen_bool(0.4) {
        steps.push("compare_percentages");
    }
    let terse = level("attention_to_detail") <= 2.0 || level("working_memory") <= 2.0 || level("motivation") <= 2.0;
    if terse {
        steps.truncate(2);
    }
    steps.truncate(6);
    steps.push("select_answer");
    let reasoning: Vec<String> = steps.iter().map(|s| phrase(s, rng)).collect();

    let clamp = |x: f64| x.round().clamp(1.0, 5.0) as u8;
    let noise = |rng: &mut ChaCha8Rng| rng.gen_range(-1..=1) as f64;
    let challenge = clamp(difficulty + (3.0 - ability) + noise(rng));
    let ratings = json!({
        "context_clarity": clamp(6.0 - challenge as f64 + noise(rng)),
        "chart_complexity": clamp(difficulty + (3.0 - level("visual_processing")) / 2.0 + noise(rng)),
        "data_difficulty": clamp(difficulty + (3.0 - level("data_statistics_literacy")) / 2.0 + noise(rng)),
        "visual_encoding_complexity": clamp(difficulty + (3.0 - level("bar_line_reading")) / 2.0 + noise(rng)),
        "overall_cognitive_challenge": challenge,
        "hint_dependency": clamp(challenge as f64 - 1.0 + if level("motivation") <= 2.0 { 1.0 } else { 0.0 }),
    });
    Ok(json!({
        "selected_label": selected,
        "reasoning_steps": reasoning,
        "ratings": ratings,
    }))
}

fn canonicalize(ctx: &Value) -> Value {
    let vocab = StepVocabulary::builtin();
    let allowed: Vec<&str> = ctx["vocabulary"].as_array().into_iter().flatten().filter_map(Value::as_str).collect();
    let labels: Vec<&str> = ctx["steps"]
        .as_array()
        .into_iter()
        .flatten()
        .map(|s| {
            let label = vocab.lookup(str_of(s));
            if allowed.is_empty() || allowed.contains(&label) {
                label
            } else {
                allowed[0]
            }
        })
        .collect();
    json!({ "labels": labels })
}

// -------------------------------------------------------------- embedding

pub(crate) const EMBEDDING_DIM: usize = 256;

fn fnv1a(bytes: impl IntoIterator<Item = u8>, seed: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Signed feature hashing of lowercase word unigrams, L2-normalised.
pub(crate) fn hash_embedding(text: &str, seed: u64) -> Vec<f64> {
    let mut v = vec![0.0; EMBEDDING_DIM];
    for token in text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
    {
        let h = fnv1a(token.bytes(), seed);
        let idx = (h % EMBEDDING_DIM as u64) as usize;
        v[idx] += if h >> 63 == 0 { 1.0 } else { -1.0 };
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

pub(crate) fn seed_for(request: &LlmRequest) -> u64 {
    let parts = [
        request.response_schema_id.as_bytes(),
        request.model_id.as_bytes(),
        request.system_prompt.as_bytes(),
        request.user_prompt.as_bytes(),
    ];
    let mut h = request.seed.unwrap_or(0);
    for part in parts {
        h = fnv1a(part.iter().copied().chain([0xff]), h);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn every_phrase_maps_back_to_its_label() {
        let vocab = StepVocabulary::builtin();
        assert_eq!(STEP_PHRASES.len(), vocab.steps.len());
        for (label, variants) in STEP_PHRASES {
            for v in *variants {
                assert_eq!(vocab.lookup(v), *label, "{v}");
                for e in ELABORATIONS {
                    assert_eq!(vocab.lookup(&format!("{v}{e}")), *label, "{v}{e}");
                }
            }
        }
    }

    #[test]
    fn feature_extraction_reads_requirements() {
        let out = extract_features(&json!({
            "text": "I need a bar chart question to retrieve and compare values, not overly straightforward"
        }));
        assert_eq!(out["chart_type"], "bar");
        assert_eq!(out["difficulty_target"], 4);
        let kps = out["knowledge_points"].as_array().unwrap();
        assert!(kps.contains(&json!("retrieve_value")) && kps.contains(&json!("compare_values")));
        let only_chart = extract_features(&json!({"text": "Make a pie chart question"}));
        assert_eq!(only_chart, json!({"chart_type": "pie"}));
        let counted = extract_features(&json!({"text": "use three distractors and a hint"}));
        assert_eq!(counted["distractor_count"], 3);
        assert_eq!(counted["hint_presence"], true);
    }

    #[test]
    fn csv_variation_keeps_shape_and_structural_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let csv = "region,row,col,rate\nNorth,0,1,12.5\nWest,1,0,8.1\n";
        let out = vary_csv(csv, &mut rng);
        let t = Table::parse(&out).unwrap();
        assert_eq!(t.headers, vec!["region", "row", "col", "rate"]);
        assert_eq!(t.rows[0][1], "0");
        assert_eq!(t.rows[0][2], "1");
        assert!(t.rows[0][3].split_once('.').unwrap().1.len() == 1);
    }

    #[test]
    fn embeddings_are_unit_and_deterministic() {
        let a = hash_embedding("I like bar charts", 3);
        assert_eq!(a, hash_embedding("i LIKE bar charts!", 3));
        let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(hash_embedding("", 0).iter().all(|x| *x == 0.0));
    }
}
