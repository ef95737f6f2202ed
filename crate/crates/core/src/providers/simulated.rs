//! Offline chat backend. Every reply is a pure function of the signature name
//! and its inputs, so runs are reproducible without a network.

use std::hash::Hasher;

use fnv::FnvHasher;
use indexmap::IndexMap;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{Map, Value, json};

use crate::error::ProviderError;

use super::catalog;
use super::chat::{ChatProvider, ChatRequest};

const WORDS: &[&str] = &[
    "lagos", "nairobi", "quito", "oslo", "hanoi", "lima", "dakar", "perth", "tbilisi", "riga", "accra", "cusco",
    "bergen", "kyoto", "porto", "malmo", "tallinn", "ghent", "zagreb", "cordoba", "austin", "denver", "tucson",
    "halifax", "regina", "darwin", "hobart", "nelson", "galway", "utrecht", "graz", "brno", "lyon", "turin", "sevilla",
    "tampere", "aarhus", "bilbao", "krakow", "varna", "izmir", "agra", "pune", "cebu", "busan", "sapporo", "medan",
    "arusha", "kumasi", "harare", "windhoek", "mombasa", "fez", "tunis", "salta", "recife", "oaxaca", "merida",
];

const TOPICS: &[&str] = &[
    "ocean tides", "volcanic soil", "medieval trade routes", "honeybee colonies", "solar eclipses", "jazz improvisation",
    "glacier retreat", "ancient calendars", "sourdough fermentation", "migratory birds", "desert irrigation",
    "printing presses", "coral bleaching", "chess openings", "language extinction", "urban gardening", "sleep cycles",
    "paper folding", "river deltas", "silk production", "northern lights", "tea ceremonies", "bridge engineering",
    "monsoon seasons", "quantum tunneling", "folk embroidery", "lighthouse keepers", "mushroom networks",
];

const OPENERS: &[&str] = &[
    "Could you", "Please", "I'd like you to", "Quick favor:", "Hey, can you", "Would you mind if you", "Go ahead and",
    "I'm hoping you can", "Help me out and", "When you get a chance,",
];

const VERBS: &[&str] = &["look up", "pull", "fetch", "check", "get", "find", "grab", "retrieve", "bring up", "show"];

fn seed_of(parts: &[&str]) -> u64 {
    let mut h = FnvHasher::default();
    for p in parts {
        h.write(p.as_bytes());
        h.write_u8(0xff);
    }
    h.finish()
}

fn rng_for(req: &ChatRequest) -> ChaCha8Rng {
    let mut parts: Vec<&str> = vec![&req.signature];
    for (k, v) in &req.inputs {
        parts.push(k);
        parts.push(v);
    }
    ChaCha8Rng::seed_from_u64(seed_of(&parts))
}

fn input<'a>(req: &'a ChatRequest, name: &str) -> &'a str {
    req.inputs.get(name).map(String::as_str).unwrap_or("")
}

fn words_of(name: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in name.chars() {
        if !c.is_alphanumeric() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        } else if c.is_uppercase() && !cur.is_empty() && !cur.ends_with(|p: char| p.is_uppercase()) {
            out.push(std::mem::take(&mut cur));
            cur.extend(c.to_lowercase());
        } else {
            cur.extend(c.to_lowercase());
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn string_value(param: &str, rng: &mut ChaCha8Rng, i: usize) -> String {
    let w = WORDS[(rng.random_range(0..WORDS.len()) + i) % WORDS.len()];
    let p = param.to_ascii_lowercase();
    if p.contains("url") || p.contains("link") {
        format!("https://{w}.example.com/item/{}", rng.random_range(1000..99999))
    } else if p.contains("email") {
        format!("{w}{}@example.org", rng.random_range(1..99))
    } else if p.contains("date") {
        format!("2025-{:02}-{:02}", rng.random_range(1..13), rng.random_range(1..29))
    } else {
        w.to_string()
    }
}

fn numeric_value(declared: &str, rng: &mut ChaCha8Rng) -> Value {
    if declared.contains("int") || declared.contains("long") {
        json!(rng.random_range(1..2000))
    } else {
        json!((rng.random_range(10..200_000) as f64) / 100.0)
    }
}

fn other_value(declared: &str, rng: &mut ChaCha8Rng) -> Value {
    let d = declared.to_ascii_lowercase();
    if d.starts_with("bool") {
        json!(rng.random_bool(0.5))
    } else if let Some(inner) = d.strip_prefix("array of ") {
        let n = rng.random_range(1..4);
        (0..n)
            .map(|_| {
                if inner.contains("int") || inner.contains("number") || inner.contains("float") {
                    json!(rng.random_range(1..500))
                } else {
                    json!(*WORDS.choose(rng).unwrap())
                }
            })
            .collect()
    } else if d.starts_with("array") {
        json!([*WORDS.choose(rng).unwrap()])
    } else if d.starts_with("object") || d.starts_with("dict") {
        json!({"key": *WORDS.choose(rng).unwrap(), "count": rng.random_range(1..50)})
    } else {
        json!(*WORDS.choose(rng).unwrap())
    }
}

fn schema_value(schema: &Value, rng: &mut ChaCha8Rng, name: &str, depth: usize) -> Value {
    let ty = schema.get("type").and_then(Value::as_str).unwrap_or("");
    match ty {
        "object" if depth < 4 => {
            let mut m = Map::new();
            if let Some(props) = schema.get("properties").and_then(Value::as_object) {
                for (k, v) in props {
                    m.insert(k.clone(), schema_value(v, rng, k, depth + 1));
                }
            }
            Value::Object(m)
        }
        "array" if depth < 4 => {
            let item = schema.get("items").cloned().unwrap_or(json!({"type": "string"}));
            (0..2).map(|_| schema_value(&item, rng, name, depth + 1)).collect()
        }
        "integer" => json!(rng.random_range(1..5000)),
        "number" => json!((rng.random_range(100..100_000) as f64) / 100.0),
        "boolean" => json!(rng.random_bool(0.5)),
        _ => json!(string_value(name, rng, 0)),
    }
}

fn describe_args(args: &Value) -> String {
    let Some(obj) = args.as_object() else {
        return String::new();
    };
    let parts: Vec<String> = obj
        .iter()
        .filter(|(_, v)| v.as_str() != Some(crate::model::MISSING_SENTINEL))
        .map(|(k, v)| {
            let v = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            format!("{} {}", words_of(k).join(" "), v)
        })
        .collect();
    parts.join(" and ")
}

fn schema_names(text: &str) -> Vec<String> {
    let v: Value = serde_json::from_str(text).unwrap_or(Value::Null);
    let one = |s: &Value| s.get("name").and_then(Value::as_str).map(str::to_string);
    match &v {
        Value::Array(items) => items.iter().filter_map(one).collect(),
        obj => one(obj).into_iter().collect(),
    }
}

fn json_list(text: &str) -> Vec<Value> {
    match serde_json::from_str::<Value>(text) {
        Ok(Value::Array(a)) => a,
        Ok(other) => vec![other],
        Err(_) => Vec::new(),
    }
}

fn api_query(rng: &mut ChaCha8Rng, fn_words: &str, details: &str) -> String {
    let opener = *OPENERS.choose(rng).unwrap();
    let verb = *VERBS.choose(rng).unwrap();
    let topic = *TOPICS.choose(rng).unwrap();
    match rng.random_range(0..6) {
        0 => format!("{opener} {verb} the {fn_words} for {details}?"),
        1 => format!("I'm planning something around {topic}, so {verb} the {fn_words} with {details}."),
        2 => format!("What does the {fn_words} say when {details}?"),
        3 => format!("{details}: {verb} that {fn_words} right away."),
        4 => format!("Before tomorrow I need the {fn_words}; use {details}. Thanks!"),
        _ => format!("My friend asked about {topic}. Can you {verb} the {fn_words}, given {details}?"),
    }
}

fn none_query(rng: &mut ChaCha8Rng, vague: bool) -> String {
    let t = *TOPICS.choose(rng).unwrap();
    let u = *TOPICS.choose(rng).unwrap();
    if vague {
        return match rng.random_range(0..5) {
            0 => format!("Can you sort out that {t} thing for me?"),
            1 => "Do the usual, please.".to_string(),
            2 => format!("I need something about {t}, you know what I mean."),
            3 => "Fix it like last time.".to_string(),
            _ => format!("Something's off with my {t} again, handle it."),
        };
    }
    match rng.random_range(0..6) {
        0 => format!("What are the primary causes of {t} and how do they impact {u}?"),
        1 => format!("Explain {t} to a ten-year-old."),
        2 => format!("Why do people find {t} so fascinating?"),
        3 => format!("Write a short poem that mentions {t}."),
        4 => format!("How did {t} influence {u} historically?"),
        _ => format!("Give me three surprising facts about {t}."),
    }
}

/// Deterministic stand-in for a chat model.
#[derive(Debug, Clone, Default)]
pub struct SimulatedLlm;

impl SimulatedLlm {
    pub fn new() -> Self {
        SimulatedLlm
    }

    fn answer(&self, req: &ChatRequest) -> Result<Vec<(&'static str, String)>, ProviderError> {
        let mut rng = rng_for(req);
        let yes = |why: &str| vec![("reasoning", why.to_string()), ("is_valid", "YES".to_string())];
        let queries = |rng: &mut ChaCha8Rng, make: &mut dyn FnMut(&mut ChaCha8Rng) -> String| {
            let mut out = vec![("reasoning", "Varied the framing, tone and length.".to_string())];
            for f in ["query_1", "query_2", "query_3", "query_4", "query_5"] {
                out.push((f, make(rng)));
            }
            out
        };
        let out = match req.signature.as_str() {
            "ValidateSequentialSchemaCompatibility" => vec![
                ("reasoning", "Each output can feed the next input.".into()),
                ("is_compatible", "YES".into()),
            ],
            "GenerateMultipleStringParameters" | "GenerateMultipleNumericalParameters" => {
                let n: usize = input(req, "num_candidates").trim().parse().unwrap_or(25);
                let name = input(req, "parameter_name");
                let declared = input(req, "parameter_type");
                let numeric = req.signature.contains("Numerical");
                let mut vals: Vec<Value> = Vec::new();
                let mut guard = 0;
                while vals.len() < n && guard < n * 50 {
                    guard += 1;
                    let v = if numeric {
                        numeric_value(declared, &mut rng)
                    } else {
                        json!(string_value(name, &mut rng, guard))
                    };
                    if !vals.contains(&v) {
                        vals.push(v);
                    }
                }
                vec![
                    ("reasoning", "Spread values across distinct regions.".into()),
                    ("generated_values", Value::Array(vals).to_string()),
                ]
            }
            "GenerateSequentialCohesiveStringParameter" | "GenerateCohesiveStringParameter" => vec![
                ("reasoning", "Consistent with the surrounding calls.".into()),
                ("generated_value", string_value(input(req, "parameter_name"), &mut rng, 0)),
            ],
            "GenerateSequentialCohesiveNumericalParameter" | "GenerateCohesiveNumericalParameter" => vec![
                ("reasoning", "Consistent with the surrounding calls.".into()),
                ("generated_value", numeric_value(input(req, "parameter_type"), &mut rng).to_string()),
            ],
            "GenerateSequentialCohesiveOtherParameter" | "GenerateCohesiveOtherParameter" | "GenerateOtherParameter" => {
                vec![("generated_value", other_value(input(req, "parameter_type"), &mut rng).to_string())]
            }
            "GenerateReturnValue" => {
                let schema: Value = serde_json::from_str(input(req, "return_type_schema")).unwrap_or(Value::Null);
                let v = if schema.is_object() && schema.get("type").is_some() {
                    schema_value(&schema, &mut rng, "result", 0)
                } else {
                    json!({"result": string_value("result", &mut rng, 0)})
                };
                vec![("reasoning", "Matches the declared shape.".into()), ("return_value", v.to_string())]
            }
            "ParameterSetValidator"
            | "PartialParameterSetValidator"
            | "ValidateReturnValue"
            | "ValidateSequentialChain"
            | "ValidateSequentialInvocation"
            | "ValidateParallelInvocation" => yes("Looks consistent."),
            "NoAPIQueryGenerator" => {
                let vague = input(req, "dataset_guidance").to_ascii_lowercase().contains("vague");
                queries(&mut rng, &mut |r| none_query(r, vague))
            }
            "MultiQueryGenerator" | "MissingParamsQueryGenerator" => {
                let names = schema_names(input(req, "api_schema"));
                let fn_words = names.first().map(|n| words_of(n).join(" ")).unwrap_or_default();
                let args_field = if req.signature == "MultiQueryGenerator" {
                    "target_parameters"
                } else {
                    "provided_parameters"
                };
                let args: Value = serde_json::from_str(input(req, args_field)).unwrap_or(Value::Null);
                let mut details = describe_args(&args);
                if details.is_empty() {
                    details = "whatever you think fits".into();
                }
                queries(&mut rng, &mut |r| api_query(r, &fn_words, &details))
            }
            "ParallelQueryGenerator" | "SequentialQueryGenerator" => {
                let names = schema_names(input(req, "api_schemas"));
                let args = json_list(input(req, "target_parameters_list"));
                let pieces: Vec<(String, String)> = names
                    .iter()
                    .enumerate()
                    .map(|(i, n)| (words_of(n).join(" "), args.get(i).map(describe_args).unwrap_or_default()))
                    .collect();
                let joiner = if req.signature.starts_with("Parallel") { ", and also " } else { ", then use that for " };
                queries(&mut rng, &mut |r| {
                    let parts: Vec<String> = pieces
                        .iter()
                        .map(|(f, d)| if d.is_empty() { format!("the {f}") } else { format!("the {f} for {d}") })
                        .collect();
                    let opener = *OPENERS.choose(r).unwrap();
                    let verb = *VERBS.choose(r).unwrap();
                    format!("{opener} {verb} {}.", parts.join(joiner))
                })
            }
            "SequentialQueryJudge" | "ParallelQueryJudge" | "APIQueryJudge" | "MissingParamsQueryJudge" => vec![
                ("reasoning", "The request supports the calls.".into()),
                ("is_reasonable", "YES".into()),
            ],
            "BatchSequentialQueryJudge"
            | "BatchParallelQueryJudge"
            | "BatchAPIQueryJudge"
            | "BatchMissingParamsQueryJudge" => {
                let n = json_list(input(req, "queries")).len();
                vec![
                    ("reasoning", "Each request supports the calls.".into()),
                    ("is_reasonable", json!(vec!["YES"; n]).to_string()),
                ]
            }
            "DatasetPatternAnalysis" => vec![
                ("reasoning", "Scanned openings and sentence forms.".into()),
                ("pattern_analysis", "Many requests open with a polite question and name the function directly.".into()),
            ],
            "DiversityGuidanceGeneration" => vec![
                ("reasoning", "Targets the repeated openings.".into()),
                (
                    "diversity_guidance",
                    "Vary sentence openings, mix statements with questions and add situational context.".into(),
                ),
            ],
            "BatchAPIRelevanceScorer" | "ParallelAPIRelevanceScorer" => {
                let targets: Vec<String> = if req.signature.starts_with("Batch") {
                    vec![input(req, "target_api").to_string()]
                } else {
                    json_list(input(req, "target_apis"))
                        .iter()
                        .filter_map(|v| v.as_str().map(str::to_string))
                        .collect()
                };
                let query = input(req, "query");
                let scores: Vec<Value> = schema_names(input(req, "apis"))
                    .into_iter()
                    .map(|n| {
                        let score = if targets.contains(&n) { 5 } else { 1 + seed_of(&[&n, query]) % 3 };
                        json!({"api_name": n, "score": score, "reasoning": "judged by overlap with the request"})
                    })
                    .collect();
                vec![("reasoning", "Scored each candidate.".into()), ("scores", Value::Array(scores).to_string())]
            }
            "ConstructSequentialInvocation" => vec![
                ("reasoning", "No different chain stands out.".into()),
                ("next_api", "''".into()),
            ],
            "ConstructParallelInvocation" => vec![
                ("reasoning", "No different set stands out.".into()),
                ("invocation_apis", "[]".into()),
            ],
            "ToolCallEquivalence" => {
                let a: Value = serde_json::from_str(input(req, "ground_truth_call")).unwrap_or(Value::Null);
                let b: Value = serde_json::from_str(input(req, "predicted_call")).unwrap_or(Value::Null);
                let same = a == b && !a.is_null();
                vec![
                    ("reasoning", if same { "Same call." } else { "The calls differ." }.into()),
                    ("equivalent", if same { "YES" } else { "NO" }.into()),
                ]
            }
            other => return Err(ProviderError::Unscripted(other.to_string())),
        };
        Ok(out)
    }
}

impl ChatProvider for SimulatedLlm {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let sig = catalog::by_name(&request.signature)
            .ok_or_else(|| ProviderError::Unscripted(request.signature.clone()))?;
        let values: IndexMap<String, String> =
            self.answer(request)?.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        Ok(sig.format_output(&values))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::chat::{call_signature, fields};

    #[test]
    fn answers_every_catalog_signature() {
        let llm = SimulatedLlm::new();
        for sig in catalog::all() {
            let inputs: IndexMap<String, String> = sig.input_names().map(|n| (n.to_string(), "[]".to_string())).collect();
            call_signature(&llm, sig, &inputs, 0).unwrap_or_else(|e| panic!("{}: {e}", sig.name));
        }
    }

    #[test]
    fn candidate_lists_are_distinct_and_sized() {
        let llm = SimulatedLlm::new();
        let sig = &*catalog::GENERATE_MULTIPLE_STRING_PARAMETERS;
        let mut inputs: IndexMap<String, String> = sig.input_names().map(|n| (n.to_string(), String::new())).collect();
        inputs.insert("parameter_name".into(), "city".into());
        inputs.insert("num_candidates".into(), "25".into());
        let out = call_signature(&llm, sig, &inputs, 0).unwrap();
        let vals: Vec<String> = serde_json::from_str(&out["generated_values"]).unwrap();
        assert_eq!(vals.len(), 25);
        let mut d = vals.clone();
        d.sort();
        d.dedup();
        assert_eq!(d.len(), 25);
        assert_eq!(call_signature(&llm, sig, &inputs, 0).unwrap(), out);
    }

    #[test]
    fn scorer_rates_target_highest() {
        let llm = SimulatedLlm::new();
        let sig = &*catalog::BATCH_API_RELEVANCE_SCORER;
        let inputs = fields([
            ("query", "weather in lima"),
            ("apis", r#"[{"name":"get_weather"},{"name":"play_song"}]"#),
            ("target_api", "get_weather"),
        ]);
        let out = call_signature(&llm, sig, &inputs, 0).unwrap();
        let scores: Vec<Value> = serde_json::from_str(&out["scores"]).unwrap();
        assert_eq!(scores[0]["score"], 5);
        assert!(scores[1]["score"].as_u64().unwrap() <= 3);
    }

    #[test]
    fn splits_identifiers() {
        assert_eq!(words_of("getWeatherForecast"), ["get", "weather", "forecast"]);
        assert_eq!(words_of("tiktok_video info"), ["tiktok", "video", "info"]);
    }
}
