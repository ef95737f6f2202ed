//! Hard-negative candidate functions: retrieve what looks related to the
//! query, drop anything the model finds plausibly correct, cut at the elbow
//! of the similarity curve and check that no other call set answers the query.

use std::collections::BTreeSet;

use rand::Rng;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tracing::debug;

use crate::config::RunConfig;
use crate::error::{Error, ProviderError, Result};
use crate::metrics::cosine;
use crate::model::{ExecutionType, FunctionLibrary, FunctionSchema, Invocation, JudgeRecord};
use crate::providers::{ChatProvider, Embedder, ask_yes_no, call_signature, catalog, fields};
use crate::sampler::function_text;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Retrieved {
    pub name: String,
    pub similarity: f64,
}

fn requires_targets(exec: ExecutionType) -> bool {
    exec != ExecutionType::None
}

/// Top-`k` functions by cosine between the query and "name: description".
/// Ties keep library order. Targets outside the top `k` are appended with
/// their own score when the type needs them; the result stays sorted.
pub fn retrieve_candidates(
    query: &str,
    library: &FunctionLibrary,
    embedder: &dyn Embedder,
    k: usize,
    targets: &[String],
    exec: ExecutionType,
) -> Result<Vec<Retrieved>> {
    let q = embedder.embed_one(query)?;
    let texts: Vec<String> = library.iter().map(function_text).collect();
    let emb = embedder.embed(&texts)?;
    let mut all: Vec<Retrieved> = library
        .iter()
        .zip(&emb)
        .map(|(f, e)| {
            Ok(Retrieved {
                name: f.name.clone(),
                similarity: cosine(&q, e)?,
            })
        })
        .collect::<Result<_>>()?;
    all.sort_by(|a, b| b.similarity.total_cmp(&a.similarity));
    let mut top: Vec<Retrieved> = all.iter().take(k).cloned().collect();
    if requires_targets(exec) {
        for t in targets {
            if !top.iter().any(|r| &r.name == t) {
                let r = all
                    .iter()
                    .find(|r| &r.name == t)
                    .ok_or_else(|| Error::invalid(format!("target {t} is not in the library")))?;
                top.push(r.clone());
            }
        }
        top.sort_by(|a, b| b.similarity.total_cmp(&a.similarity));
    }
    Ok(top)
}

fn parse_ratings(text: &str, names: &[String]) -> std::result::Result<Vec<u8>, ProviderError> {
    let list: Vec<Value> = serde_json::from_str(text.trim())
        .map_err(|e| ProviderError::Malformed(format!("scores are not a JSON array: {e}")))?;
    let rating = |v: &Value| -> Option<u8> {
        let s = v.get("score")?;
        let x = s.as_f64().or_else(|| s.as_str()?.trim().parse().ok())?;
        (1.0..=5.0).contains(&x).then_some(x.round() as u8)
    };
    names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let by_name = list.iter().find(|v| v.get("api_name").and_then(Value::as_str) == Some(n.as_str()));
            let entry = by_name.or_else(|| (list.len() == names.len()).then(|| &list[i]));
            entry
                .and_then(rating)
                .ok_or_else(|| ProviderError::Malformed(format!("no usable score for {n}")))
        })
        .collect()
}

/// Model ratings from 1 (unrelated) to 5 (exact fit), aligned with `candidates`.
pub fn score_plausibility(
    query: &str,
    candidates: &[&FunctionSchema],
    targets: &[String],
    llm: &dyn ChatProvider,
    retries: usize,
) -> Result<Vec<u8>> {
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let apis: Vec<Value> = candidates.iter().map(|f| f.to_json()).collect();
    let apis = serde_json::to_string(&apis)?;
    let (sig, inputs) = if targets.len() > 1 {
        (
            &*catalog::PARALLEL_API_RELEVANCE_SCORER,
            fields([("query", query.to_string()), ("apis", apis), ("target_apis", serde_json::to_string(targets)?)]),
        )
    } else {
        let target = targets.first().cloned().unwrap_or_else(|| "None".into());
        (
            &*catalog::BATCH_API_RELEVANCE_SCORER,
            fields([("query", query.to_string()), ("apis", apis), ("target_api", target)]),
        )
    };
    let names: Vec<String> = candidates.iter().map(|f| f.name.clone()).collect();
    let mut last = None;
    for _ in 0..=retries {
        let out = call_signature(llm, sig, &inputs, retries)?;
        match parse_ratings(&out["scores"], &names) {
            Ok(r) => return Ok(r),
            Err(e) => {
                debug!(error = %e, "relevance scores misaligned");
                last = Some(e);
            }
        }
    }
    Err(Error::Provider(last.expect("at least one attempt")))
}

/// Highest rating a non-target may have and still serve as a distractor.
pub fn plausibility_threshold(exec: ExecutionType) -> u8 {
    if exec == ExecutionType::MissingParams { 1 } else { 2 }
}

/// Keeps targets and every candidate rated at or below the type's threshold.
pub fn filter_by_plausibility<'a>(
    scored: &'a [(Retrieved, u8)],
    targets: &[String],
    exec: ExecutionType,
) -> Vec<&'a (Retrieved, u8)> {
    let t = plausibility_threshold(exec);
    scored
        .iter()
        .filter(|(r, rating)| targets.contains(&r.name) || *rating <= t)
        .collect()
}

/// Number of leading entries to keep from descending `scores`.
///
/// With `d_i = s_i - s_{i+1}` and `dd_i = d_i - d_{i-1}` for `i >= 1`, the
/// elbow is the first index of the largest `dd_i`; entries `0..=elbow` are
/// kept. The count is floored at `max(1, min_keep)` and capped at the length.
/// Fewer than three scores are all kept.
pub fn elbow_cutoff(scores: &[f64], min_keep: usize) -> usize {
    let n = scores.len();
    if n < 3 {
        return n;
    }
    let d: Vec<f64> = scores.windows(2).map(|w| w[0] - w[1]).collect();
    let mut elbow = 1;
    let mut best = f64::NEG_INFINITY;
    for i in 1..d.len() {
        let dd = d[i] - d[i - 1];
        // Round-off between visually equal gaps must not move the elbow.
        if dd > best + 1e-12 {
            best = dd;
            elbow = i;
        }
    }
    (elbow + 1).max(min_keep).max(1).min(n)
}

pub fn min_keep(exec: ExecutionType, targets: usize) -> usize {
    if exec.is_multi() { 2 * targets } else { 1 }
}

/// Function names called in `[a(x=1), b(y="z")]`, `a(x=1)` or `''`.
pub fn call_names(text: &str) -> Vec<String> {
    let mut names = Vec::new();
    let mut depth = 0usize;
    let mut quote: Option<char> = None;
    let mut ident = String::new();
    for c in text.chars() {
        if let Some(q) = quote {
            if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '"' | '\'' if depth > 0 => quote = Some(c),
            '(' => {
                if depth == 0 && !ident.is_empty() {
                    names.push(ident.clone());
                }
                ident.clear();
                depth += 1;
            }
            ')' => depth = depth.saturating_sub(1),
            c if depth == 0 && (c.is_alphanumeric() || c == '_' || c == '.' || c == '-') => ident.push(c),
            _ if depth == 0 => ident.clear(),
            _ => {}
        }
    }
    names
}

/// What the alternative-invocation check changed.
#[derive(Debug, Clone, PartialEq)]
pub struct AlternativeOutcome {
    pub candidates: Vec<String>,
    pub targets: Vec<String>,
    pub execution_type: ExecutionType,
    /// No target survived: the example must be discarded.
    pub invalid: bool,
    pub verdicts: Vec<JudgeRecord>,
}

fn schemas(library: &FunctionLibrary, names: &[String]) -> Result<String> {
    let v: Vec<Value> = names.iter().filter_map(|n| library.get(n)).map(FunctionSchema::to_json).collect();
    Ok(serde_json::to_string(&v)?)
}

/// Asks the model for a different call set answering `query` from the
/// candidate list. A validated alternative that uses non-targets removes those
/// distractors; one that is a strict subset of the targets shrinks them.
#[allow(clippy::too_many_arguments)]
pub fn validate_invocation_alternatives(
    query: &str,
    candidates: &[String],
    targets: &[String],
    invocations: &[Invocation],
    return_values: &[Value],
    exec: ExecutionType,
    library: &FunctionLibrary,
    llm: &dyn ChatProvider,
    retries: usize,
) -> Result<AlternativeOutcome> {
    let mut outcome = AlternativeOutcome {
        candidates: candidates.to_vec(),
        targets: targets.to_vec(),
        execution_type: exec,
        invalid: false,
        verdicts: Vec::new(),
    };
    let available = schemas(library, candidates)?;
    let (calls, verdict) = match exec {
        ExecutionType::Parallel => {
            let out = call_signature(
                llm,
                &catalog::CONSTRUCT_PARALLEL_INVOCATION,
                &fields([("query", query.to_string()), ("available_apis", available)]),
                retries,
            )?;
            let text = out["invocation_apis"].trim().to_string();
            let names = call_names(&text);
            if names.is_empty() {
                return Ok(outcome);
            }
            let sig = &*catalog::VALIDATE_PARALLEL_INVOCATION;
            let (valid, reasoning) = ask_yes_no(
                llm,
                sig,
                &fields([
                    ("query", query.to_string()),
                    ("invocation_apis", text),
                    ("api_schemas", schemas(library, &names)?),
                ]),
                "is_valid",
                retries,
            )?;
            (names, JudgeRecord { stage: sig.name.clone(), valid, reasoning })
        }
        ExecutionType::Sequential => {
            let mut made: Vec<String> = Vec::new();
            let mut names: Vec<String> = Vec::new();
            let mut returns: Vec<Value> = Vec::new();
            for step in 0..candidates.len().max(targets.len()) + 1 {
                let out = call_signature(
                    llm,
                    &catalog::CONSTRUCT_SEQUENTIAL_INVOCATION,
                    &fields([
                        ("query", query.to_string()),
                        ("available_apis", available.clone()),
                        ("invocations_up_to_this_point", serde_json::to_string(&made)?),
                        ("return_values_up_to_this_point", serde_json::to_string(&returns)?),
                    ]),
                    retries,
                )?;
                let next = out["next_api"].trim().to_string();
                let Some(name) = call_names(&next).into_iter().next() else {
                    break;
                };
                if !candidates.contains(&name) {
                    break;
                }
                // A call matching the ground truth at this position reuses its known result.
                let known = invocations
                    .get(step)
                    .filter(|inv| inv.function_name == name)
                    .and_then(|_| return_values.get(step).cloned());
                returns.push(known.unwrap_or(Value::Null));
                made.push(next);
                names.push(name);
            }
            if names.is_empty() {
                return Ok(outcome);
            }
            let sig = &*catalog::VALIDATE_SEQUENTIAL_INVOCATION;
            let (valid, reasoning) = ask_yes_no(
                llm,
                sig,
                &fields([
                    ("query", query.to_string()),
                    ("invocation_apis", serde_json::to_string(&made)?),
                    ("api_schemas", schemas(library, &names)?),
                    ("return_values_list", serde_json::to_string(&returns)?),
                ]),
                "is_valid",
                retries,
            )?;
            (names, JudgeRecord { stage: sig.name.clone(), valid, reasoning })
        }
        _ => return Ok(outcome),
    };
    let valid = verdict.valid;
    outcome.verdicts.push(verdict);
    if !valid {
        return Ok(outcome);
    }
    apply_alternative(&mut outcome, &calls);
    Ok(outcome)
}

/// Applies a validated alternative call set to the outcome.
pub fn apply_alternative(outcome: &mut AlternativeOutcome, calls: &[String]) {
    let used: BTreeSet<&String> = calls.iter().collect();
    let target_set: BTreeSet<&String> = outcome.targets.iter().collect();
    let foreign: Vec<String> = used.iter().filter(|n| !target_set.contains(*n)).map(|n| (*n).clone()).collect();
    if !foreign.is_empty() {
        debug!(?foreign, "alternative uses distractors; dropping them");
        outcome.candidates.retain(|c| !foreign.contains(c));
        return;
    }
    if used.len() < target_set.len() {
        outcome.targets.retain(|t| used.contains(t));
        match outcome.targets.len() {
            0 => outcome.invalid = true,
            1 => outcome.execution_type = ExecutionType::Single,
            _ => {}
        }
    }
}

/// Targets plus kept distractors, shuffled.
pub fn finalize(distractors: &[String], targets: &[String], rng: &mut impl Rng) -> Vec<String> {
    let mut all: Vec<String> = targets.to_vec();
    all.extend(distractors.iter().filter(|d| !targets.contains(d)).cloned());
    all.shuffle(rng);
    all
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistractorOutcome {
    pub candidate_functions: Vec<String>,
    pub targets: Vec<String>,
    pub execution_type: ExecutionType,
    pub ratings: Vec<(String, u8)>,
    pub verdicts: Vec<JudgeRecord>,
}

/// Full distractor pipeline for one accepted query. Returns
/// `Error::Generation` when the example has to be regenerated.
#[allow(clippy::too_many_arguments)]
pub fn select_distractors(
    query: &str,
    exec: ExecutionType,
    targets: &[String],
    invocations: &[Invocation],
    return_values: &[Value],
    library: &FunctionLibrary,
    embedder: &dyn Embedder,
    llm: &dyn ChatProvider,
    cfg: &RunConfig,
    rng: &mut impl Rng,
) -> Result<DistractorOutcome> {
    let retrieved = retrieve_candidates(query, library, embedder, cfg.retrieval_k, targets, exec)?;
    let schemas: Vec<&FunctionSchema> = retrieved
        .iter()
        .map(|r| library.get(&r.name).expect("retrieved from the library"))
        .collect();
    let ratings = score_plausibility(query, &schemas, targets, llm, cfg.retry_limit)?;
    let scored: Vec<(Retrieved, u8)> = retrieved.into_iter().zip(ratings).collect();
    let kept = filter_by_plausibility(&scored, targets, exec);
    let floor = min_keep(exec, targets.len());
    if exec.is_multi() && kept.len() < floor {
        return Err(Error::Generation(format!(
            "{} plausible-safe candidates, need {floor}",
            kept.len()
        )));
    }
    let sims: Vec<f64> = kept.iter().map(|(r, _)| r.similarity).collect();
    let cut = elbow_cutoff(&sims, floor);
    let mut pool: Vec<String> = kept[..cut].iter().map(|(r, _)| r.name.clone()).collect();
    for t in targets {
        if !pool.contains(t) {
            pool.push(t.clone());
        }
    }
    let mut outcome = AlternativeOutcome {
        candidates: pool.clone(),
        targets: targets.to_vec(),
        execution_type: exec,
        invalid: false,
        verdicts: Vec::new(),
    };
    if exec.is_multi() {
        outcome = validate_invocation_alternatives(
            query,
            &pool,
            targets,
            invocations,
            return_values,
            exec,
            library,
            llm,
            cfg.retry_limit,
        )?;
        if outcome.invalid {
            return Err(Error::Generation("an alternative call set leaves no target".into()));
        }
    }
    let distractors: Vec<String> = outcome
        .candidates
        .iter()
        .filter(|c| !outcome.targets.contains(c))
        .cloned()
        .collect();
    Ok(DistractorOutcome {
        candidate_functions: finalize(&distractors, &outcome.targets, rng),
        targets: outcome.targets,
        execution_type: outcome.execution_type,
        ratings: scored.iter().map(|(r, s)| (r.name.clone(), *s)).collect(),
        verdicts: outcome.verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_function_library;
    use crate::providers::{HashEmbedder, ScriptedLlm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn elbow_hand_traces() {
        // d = [.02, .02, .36, .02], dd = [0, .34, -.34]: elbow at 2, keep 3.
        assert_eq!(elbow_cutoff(&[0.9, 0.88, 0.86, 0.5, 0.48], 1), 3);
        // Equal gaps: dd all zero, first index wins, floor applies.
        assert_eq!(elbow_cutoff(&[0.9, 0.8, 0.7, 0.6, 0.5], 1), 2);
        assert_eq!(elbow_cutoff(&[0.9, 0.8, 0.7, 0.6, 0.5], 4), 4);
        assert_eq!(elbow_cutoff(&[0.9, 0.1], 1), 2);
        assert_eq!(elbow_cutoff(&[0.9, 0.8, 0.7], 9), 3);
    }

    #[test]
    fn thresholds_by_type() {
        let r = |n: &str, s| (Retrieved { name: n.into(), similarity: 0.5 }, s);
        let scored = vec![r("t", 5), r("a", 3), r("b", 2), r("c", 1)];
        let names = |v: Vec<&(Retrieved, u8)>| v.into_iter().map(|(r, _)| r.name.clone()).collect::<Vec<_>>();
        let targets = vec!["t".to_string()];
        assert_eq!(names(filter_by_plausibility(&scored, &targets, ExecutionType::Single)), ["t", "b", "c"]);
        assert_eq!(names(filter_by_plausibility(&scored, &targets, ExecutionType::MissingParams)), ["t", "c"]);
    }

    #[test]
    fn call_names_parse() {
        assert_eq!(call_names("[get_a(x=1, y=\"b(c)\"), get_b()]"), ["get_a", "get_b"]);
        assert_eq!(call_names("''"), Vec::<String>::new());
        assert_eq!(call_names("[]"), Vec::<String>::new());
        assert_eq!(call_names("lookup(q='a, b')"), ["lookup"]);
    }

    #[test]
    fn subset_alternative_downgrades() {
        let mut o = AlternativeOutcome {
            candidates: vec!["a".into(), "b".into(), "d".into()],
            targets: vec!["a".into(), "b".into()],
            execution_type: ExecutionType::Parallel,
            invalid: false,
            verdicts: Vec::new(),
        };
        apply_alternative(&mut o, &["a".into()]);
        assert_eq!(o.targets, ["a"]);
        assert_eq!(o.execution_type, ExecutionType::Single);

        let mut o2 = AlternativeOutcome {
            candidates: vec!["a".into(), "b".into(), "d".into()],
            targets: vec!["a".into(), "b".into()],
            execution_type: ExecutionType::Parallel,
            invalid: false,
            verdicts: Vec::new(),
        };
        apply_alternative(&mut o2, &["a".into(), "d".into()]);
        assert_eq!(o2.candidates, ["a", "b"]);
        assert_eq!(o2.targets, ["a", "b"]);
    }

    const LIB: &str = r#"[
        {"name":"news_top","description":"top news headlines about a topic","parameters":{"type":"object","properties":{}}},
        {"name":"news_search","description":"search news articles about a topic","parameters":{"type":"object","properties":{}}},
        {"name":"plant_care","description":"watering schedule for house plants","parameters":{"type":"object","properties":{}}}
    ]"#;

    #[test]
    fn small_library_returns_all_and_forces_targets() {
        let lib = parse_function_library(LIB).unwrap();
        let e = HashEmbedder::default();
        let all = retrieve_candidates("climate news", &lib, &e, 20, &[], ExecutionType::None).unwrap();
        assert_eq!(all.len(), 3);
        let top1 = retrieve_candidates("top news headlines", &lib, &e, 1, &["plant_care".into()], ExecutionType::Single).unwrap();
        assert_eq!(top1.len(), 2);
        assert!(top1.iter().any(|r| r.name == "plant_care"));
        assert!(top1.windows(2).all(|w| w[0].similarity >= w[1].similarity));
    }

    #[test]
    fn scorer_reply_is_aligned_by_name() {
        let lib = parse_function_library(LIB).unwrap();
        let llm = ScriptedLlm::new();
        let scores = r#"[{"api_name":"plant_care","score":1,"reasoning":"unrelated"},{"api_name":"news_top","score":5,"reasoning":"fits"}]"#;
        llm.push_fields(&catalog::BATCH_API_RELEVANCE_SCORER, &[("reasoning", "r"), ("scores", scores)]);
        let fs = vec![lib.get("news_top").unwrap(), lib.get("plant_care").unwrap()];
        let r = score_plausibility("climate change news", &fs, &["news_top".into()], &llm, 3).unwrap();
        assert_eq!(r, [5, 1]);
        assert!(score_plausibility("q", &[], &[], &llm, 3).unwrap().is_empty());
    }

    #[test]
    fn finalize_is_seeded_and_fair() {
        let d: Vec<String> = vec!["b".into(), "c".into(), "d".into()];
        let t = vec!["a".to_string()];
        let a = finalize(&d, &t, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, finalize(&d, &t, &mut ChaCha8Rng::seed_from_u64(5)));
        let first = (0..4000u64)
            .filter(|s| finalize(&d, &t, &mut ChaCha8Rng::seed_from_u64(*s))[0] == "a")
            .count();
        assert!((first as f64 / 4000.0 - 0.25).abs() < 0.03, "{first}");
    }
}
