//! Query generation: several rounds of candidates, judged for validity and
//! ranked by how much each adds to the diversity of a reference sample.

use indexmap::IndexMap;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use tracing::{debug, warn};

use crate::config::RunConfig;
use crate::error::{Error, ProviderError, Result};
use crate::metrics::stats::subsample_indices;
use crate::metrics::{Metric, ShallowChunker, SyntaxAnalyzer, compute_metric, ranks_descending, rrf_fuse};
use crate::model::{DiversityRank, ExecutionType, FunctionSchema, JudgeRecord, NoneKind};
use crate::paramgen::without_sentinels;
use crate::providers::{ChatProvider, Embedder, Signature, ask_yes_no, call_signature, catalog, fields, parse_yes_no};

const QUERY_FIELDS: [&str; 5] = ["query_1", "query_2", "query_3", "query_4", "query_5"];

/// Everything a query must express: targets, arguments and chain results.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySkeleton {
    pub execution_type: ExecutionType,
    pub functions: Vec<FunctionSchema>,
    pub arguments: Vec<Map<String, Value>>,
    pub return_values: Vec<Value>,
    pub missing: Vec<String>,
    pub none_kind: Option<NoneKind>,
}

impl QuerySkeleton {
    pub fn none(kind: NoneKind) -> Self {
        QuerySkeleton {
            execution_type: ExecutionType::None,
            functions: Vec::new(),
            arguments: Vec::new(),
            return_values: Vec::new(),
            missing: Vec::new(),
            none_kind: Some(kind),
        }
    }

    fn schemas_json(&self) -> String {
        json(&self.functions.iter().map(FunctionSchema::to_json).collect::<Vec<_>>())
    }

    fn first_schema(&self) -> Result<String> {
        self.functions
            .first()
            .map(|f| json(&f.to_json()))
            .ok_or_else(|| Error::invalid(format!("{} skeleton without a function", self.execution_type)))
    }

    fn first_args(&self) -> Map<String, Value> {
        self.arguments.first().cloned().unwrap_or_default()
    }

    /// Inputs shared by the generator and judge of this execution type,
    /// excluding `query`, guidance and attempts.
    fn target_inputs(&self) -> Result<Vec<(&'static str, String)>> {
        Ok(match self.execution_type {
            ExecutionType::Single => vec![
                ("api_schema", self.first_schema()?),
                ("target_parameters", json(&self.first_args())),
            ],
            ExecutionType::MissingParams => vec![
                ("api_schema", self.first_schema()?),
                ("provided_parameters", json(&without_sentinels(&self.first_args()))),
                ("missing_parameters", json(&self.missing)),
            ],
            ExecutionType::Parallel => vec![
                ("api_schemas", self.schemas_json()),
                ("target_parameters_list", json(&self.arguments)),
            ],
            ExecutionType::Sequential => vec![
                ("api_schemas", self.schemas_json()),
                ("target_parameters_list", json(&self.arguments)),
                ("return_values_list", json(&self.return_values)),
            ],
            ExecutionType::None => Vec::new(),
        })
    }
}

fn json<T: Serialize + ?Sized>(v: &T) -> String {
    serde_json::to_string(v).expect("JSON values serialize")
}

pub fn generator_signature(exec: ExecutionType) -> &'static Signature {
    match exec {
        ExecutionType::Single => &catalog::MULTI_QUERY_GENERATOR,
        ExecutionType::MissingParams => &catalog::MISSING_PARAMS_QUERY_GENERATOR,
        ExecutionType::Parallel => &catalog::PARALLEL_QUERY_GENERATOR,
        ExecutionType::Sequential => &catalog::SEQUENTIAL_QUERY_GENERATOR,
        ExecutionType::None => &catalog::NO_API_QUERY_GENERATOR,
    }
}

/// Single and batch judge for a type. NONE has neither.
pub fn judge_signatures(exec: ExecutionType) -> Option<(&'static Signature, &'static Signature)> {
    match exec {
        ExecutionType::Single => Some((&catalog::API_QUERY_JUDGE, &catalog::BATCH_API_QUERY_JUDGE)),
        ExecutionType::MissingParams => Some((&catalog::MISSING_PARAMS_QUERY_JUDGE, &catalog::BATCH_MISSING_PARAMS_QUERY_JUDGE)),
        ExecutionType::Parallel => Some((&catalog::PARALLEL_QUERY_JUDGE, &catalog::BATCH_PARALLEL_QUERY_JUDGE)),
        ExecutionType::Sequential => Some((&catalog::SEQUENTIAL_QUERY_JUDGE, &catalog::BATCH_SEQUENTIAL_QUERY_JUDGE)),
        ExecutionType::None => None,
    }
}

pub const QUERY_JUDGE_STAGE: &str = "QueryJudge";

/// Judges each candidate. Requests without a target call pass unchecked.
/// A batch reply that cannot be aligned with the candidates falls back to
/// one call per candidate.
pub fn judge_queries(
    candidates: &[String],
    skeleton: &QuerySkeleton,
    llm: &dyn ChatProvider,
    batch: bool,
    retries: usize,
) -> Result<Vec<JudgeRecord>> {
    let Some((single, batched)) = judge_signatures(skeleton.execution_type) else {
        return Ok(candidates
            .iter()
            .map(|_| JudgeRecord {
                stage: QUERY_JUDGE_STAGE.into(),
                valid: true,
                reasoning: "no target call to check".into(),
            })
            .collect());
    };
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let target = skeleton.target_inputs()?;
    if batch {
        let mut inputs = vec![("queries", json(candidates))];
        inputs.extend(target.iter().cloned());
        match call_signature(llm, batched, &fields(inputs), retries) {
            Ok(out) => match parse_batch_verdicts(&out["is_reasonable"], candidates.len()) {
                Some(verdicts) => {
                    let reasoning = out.get("reasoning").cloned().unwrap_or_default();
                    return Ok(verdicts
                        .into_iter()
                        .map(|valid| JudgeRecord {
                            stage: batched.name.clone(),
                            valid,
                            reasoning: reasoning.clone(),
                        })
                        .collect());
                }
                None => debug!("batch verdicts misaligned, judging one by one"),
            },
            Err(e) if e.is_parse_failure() => debug!(error = %e, "batch judge unparseable, judging one by one"),
            Err(e) => return Err(e.into()),
        }
    }
    candidates
        .iter()
        .map(|q| {
            let mut inputs = vec![("query", q.clone())];
            inputs.extend(target.iter().cloned());
            let (valid, reasoning) = ask_yes_no(llm, single, &fields(inputs), "is_reasonable", retries)?;
            Ok(JudgeRecord {
                stage: single.name.clone(),
                valid,
                reasoning,
            })
        })
        .collect()
}

fn parse_batch_verdicts(text: &str, n: usize) -> Option<Vec<bool>> {
    let list: Vec<Value> = serde_json::from_str(text.trim()).ok()?;
    if list.len() != n {
        return None;
    }
    list.iter()
        .map(|v| match v {
            Value::String(s) => parse_yes_no(s).ok(),
            Value::Bool(b) => Some(*b),
            _ => None,
        })
        .collect()
}

/// Fused diversity ranking of a candidate pool.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    /// Candidate indices, best first.
    pub order: Vec<usize>,
    pub rrf_scores: Vec<f64>,
    /// `metric_ranks[m][c]`: rank of candidate `c` under `Metric::RANKING[m]`.
    pub metric_ranks: Vec<Vec<usize>>,
    /// `values[m][c]`: metric value of the base corpus plus candidate `c`.
    pub values: Vec<Vec<f64>>,
}

impl Ranking {
    pub fn fused_rank(&self, candidate: usize) -> usize {
        1 + self.order.iter().position(|&c| c == candidate).expect("candidate is ranked")
    }

    pub fn metric_ranks_of(&self, candidate: usize) -> IndexMap<String, usize> {
        Metric::RANKING
            .iter()
            .zip(&self.metric_ranks)
            .map(|(m, r)| (m.name().to_string(), r[candidate]))
            .collect()
    }
}

/// Scores every candidate by the value of each ranking metric on
/// `base ∪ {candidate}`, ranks per metric (higher is better) and fuses the
/// ranks with RRF. A metric that cannot be evaluated ranks the candidate last.
pub fn rank_candidates_by_diversity(
    base: &[String],
    base_embeddings: &[Vec<f64>],
    candidates: &[String],
    candidate_embeddings: &[Vec<f64>],
    analyzer: &dyn SyntaxAnalyzer,
    k: usize,
) -> Result<Ranking> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidates to rank"));
    }
    if candidates.len() != candidate_embeddings.len() || base.len() != base_embeddings.len() {
        return Err(Error::invalid("texts and embeddings differ in length"));
    }
    let pairs: Vec<(usize, usize)> = (0..Metric::RANKING.len())
        .flat_map(|m| (0..candidates.len()).map(move |c| (m, c)))
        .collect();
    let flat: Vec<f64> = pairs
        .par_iter()
        .map(|&(m, c)| {
            let metric = Metric::RANKING[m];
            let mut texts = base.to_vec();
            texts.push(candidates[c].clone());
            let emb = if metric.needs_embeddings() {
                let mut e = base_embeddings.to_vec();
                e.push(candidate_embeddings[c].clone());
                e
            } else {
                Vec::new()
            };
            match compute_metric(metric, &texts, &emb, analyzer) {
                Ok(v) if v.is_finite() => v,
                _ => f64::NEG_INFINITY,
            }
        })
        .collect();
    let values: Vec<Vec<f64>> = flat.chunks(candidates.len()).map(<[f64]>::to_vec).collect();
    let metric_ranks: Vec<Vec<usize>> = values.iter().map(|v| ranks_descending(v)).collect();
    let fused = rrf_fuse(&metric_ranks, k)?;
    Ok(Ranking {
        order: fused.order,
        rrf_scores: fused.scores,
        metric_ranks,
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackFocus {
    Validation,
    Diversity,
}

/// Validation problems dominate when strictly more than half the round failed.
pub fn feedback_focus(records: &[JudgeRecord]) -> FeedbackFocus {
    let failed = records.iter().filter(|r| !r.valid).count();
    if !records.is_empty() && failed * 2 > records.len() {
        FeedbackFocus::Validation
    } else {
        FeedbackFocus::Diversity
    }
}

/// Guidance for the next round, written by the model from either the judge
/// objections or the diversity ordering of the round's candidates.
pub fn build_feedback(
    candidates: &[String],
    records: &[JudgeRecord],
    ranking: &[(String, usize)],
    llm: &dyn ChatProvider,
    retries: usize,
) -> Result<(FeedbackFocus, String)> {
    let focus = feedback_focus(records);
    let report = match focus {
        FeedbackFocus::Validation => {
            let mut lines = vec!["Most requests were rejected. Objections:".to_string()];
            lines.extend(
                candidates
                    .iter()
                    .zip(records)
                    .filter(|(_, r)| !r.valid)
                    .map(|(q, r)| format!("- {q} => {}", r.reasoning)),
            );
            lines.join("\n")
        }
        FeedbackFocus::Diversity => {
            let mut lines = vec!["Accepted requests ordered by added diversity, best first:".to_string()];
            lines.extend(ranking.iter().map(|(q, rank)| format!("{rank}. {q}")));
            lines.join("\n")
        }
    };
    let out = call_signature(
        llm,
        &catalog::DIVERSITY_GUIDANCE_GENERATION,
        &fields([("dataset_sample", candidates.join("\n")), ("pattern_analysis", report)]),
        retries,
    )?;
    Ok((focus, out["diversity_guidance"].trim().to_string()))
}

pub fn analyze_dataset_patterns(
    sample: &[String],
    diversity_context: &str,
    llm: &dyn ChatProvider,
    retries: usize,
) -> Result<Option<String>> {
    if sample.is_empty() {
        return Ok(None);
    }
    let out = call_signature(
        llm,
        &catalog::DATASET_PATTERN_ANALYSIS,
        &fields([("dataset_sample", sample.join("\n")), ("diversity_context", diversity_context.to_string())]),
        retries,
    )?;
    Ok(Some(out["pattern_analysis"].trim().to_string()))
}

pub fn generate_diversity_guidance(sample: &[String], patterns: &str, llm: &dyn ChatProvider, retries: usize) -> Result<String> {
    let out = call_signature(
        llm,
        &catalog::DIVERSITY_GUIDANCE_GENERATION,
        &fields([("dataset_sample", sample.join("\n")), ("pattern_analysis", patterns.to_string())]),
        retries,
    )?;
    Ok(out["diversity_guidance"].trim().to_string())
}

/// Dataset-wide guidance, refreshed every `period` accepted examples.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PatternMonitor {
    pub guidance: Option<String>,
    pub analyses: usize,
}

impl PatternMonitor {
    /// Called after each acceptance with the full accepted query list.
    pub fn after_accept(
        &mut self,
        accepted: &[String],
        cfg: &RunConfig,
        llm: &dyn ChatProvider,
        rng: &mut impl Rng,
    ) -> Result<bool> {
        let period = cfg.pattern_analysis_period;
        if period == 0 || accepted.is_empty() || accepted.len() % period != 0 {
            return Ok(false);
        }
        let mut idx = subsample_indices(rng, accepted.len(), cfg.pattern_sample_size.min(accepted.len()));
        idx.sort_unstable();
        let sample: Vec<String> = idx.iter().map(|&i| accepted[i].clone()).collect();
        let Some(patterns) = analyze_dataset_patterns(&sample, &format!("{} accepted requests", accepted.len()), llm, cfg.retry_limit)? else {
            return Ok(false);
        };
        self.guidance = Some(generate_diversity_guidance(&sample, &patterns, llm, cfg.retry_limit)?);
        self.analyses += 1;
        Ok(true)
    }
}

/// One candidate as shown back to the generator in later rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub round: usize,
    pub query: String,
    pub valid: bool,
    pub reasoning: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diversity_rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryOutcome {
    pub query: String,
    pub rank: DiversityRank,
    pub verdicts: Vec<JudgeRecord>,
    pub attempts: Vec<Attempt>,
}

pub struct QueryEnv<'a> {
    pub llm: &'a dyn ChatProvider,
    pub embedder: &'a dyn Embedder,
    pub cfg: &'a RunConfig,
    /// Dataset-wide guidance from pattern analysis, if any yet.
    pub guidance: Option<&'a str>,
}

const VAGUE_STYLE: &str = "Style for this batch: vague requests that never say what exactly is wanted.";
const NO_API_STYLE: &str = "Style for this batch: questions fully answerable from general knowledge, needing no tool.";

fn guidance_text(skeleton: &QuerySkeleton, dataset: Option<&str>, round: Option<&str>, references: &[String]) -> String {
    let mut parts = Vec::new();
    match skeleton.none_kind {
        Some(NoneKind::Vague) => parts.push(VAGUE_STYLE.to_string()),
        Some(NoneKind::NoApi) => parts.push(NO_API_STYLE.to_string()),
        None => {}
    }
    if let Some(g) = dataset {
        parts.push(g.to_string());
    }
    if let Some(g) = round {
        parts.push(g.to_string());
    }
    if !references.is_empty() {
        let refs: Vec<String> = references.iter().map(|r| format!("- {r}")).collect();
        parts.push(format!("Requests already in the dataset; differ from them:\n{}", refs.join("\n")));
    }
    if parts.is_empty() { "None".into() } else { parts.join("\n\n") }
}

fn parse_candidates(out: &IndexMap<String, String>) -> Vec<String> {
    let mut v: Vec<String> = Vec::new();
    for f in QUERY_FIELDS {
        if let Some(q) = out.get(f) {
            let q = q.trim().trim_matches('"').trim().to_string();
            if !q.is_empty() && !v.contains(&q) {
                v.push(q);
            }
        }
    }
    v
}

impl<'a> QueryEnv<'a> {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        Ok(self.embedder.embed(texts)?)
    }

    /// Runs the configured rounds and returns the best judge-valid query, or
    /// `None` when no candidate ever passed. `dataset` is the accepted query
    /// list at the time the example started.
    pub fn generate_query(&self, skeleton: &QuerySkeleton, dataset: &[String], rng: &mut impl Rng) -> Result<Option<QueryOutcome>> {
        let cfg = self.cfg;
        let n_ref = cfg.reference_queries.min(dataset.len());
        let mut ref_idx = subsample_indices(rng, dataset.len(), n_ref);
        ref_idx.sort_unstable();
        let references: Vec<String> = ref_idx.iter().map(|&i| dataset[i].clone()).collect();
        let ref_emb = self.embed(&references)?;
        let analyzer = ShallowChunker;

        let sig = generator_signature(skeleton.execution_type);
        let target = skeleton.target_inputs()?;
        let mut attempts: Vec<Attempt> = Vec::new();
        let mut verdicts: Vec<JudgeRecord> = Vec::new();
        let mut pool: Vec<(usize, String)> = Vec::new();
        let mut pool_emb: Vec<Vec<f64>> = Vec::new();
        let mut best: Option<(String, DiversityRank)> = None;
        let mut round_guidance: Option<String> = None;

        for round in 1..=cfg.rounds {
            let mut inputs = target.clone();
            inputs.push((
                "dataset_guidance",
                guidance_text(skeleton, self.guidance, round_guidance.as_deref(), &references),
            ));
            inputs.push(("previous_attempts", if attempts.is_empty() { "None".into() } else { json(&attempts) }));
            let out = match call_signature(self.llm, sig, &fields(inputs), cfg.retry_limit) {
                Ok(out) => out,
                Err(e) if e.is_parse_failure() => {
                    warn!(round, error = %e, "query generator reply unusable");
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let candidates: Vec<String> = parse_candidates(&out)
                .into_iter()
                .filter(|q| !pool.iter().any(|(_, p)| p == q))
                .take(cfg.candidates_per_round)
                .collect();
            if candidates.is_empty() {
                continue;
            }
            let records = judge_queries(&candidates, skeleton, self.llm, cfg.batch_judging, cfg.retry_limit)?;
            let first_new = attempts.len();
            let mut round_valid = Vec::new();
            for (q, r) in candidates.iter().zip(&records) {
                attempts.push(Attempt {
                    round,
                    query: q.clone(),
                    valid: r.valid,
                    reasoning: r.reasoning.clone(),
                    diversity_rank: None,
                });
                if r.valid {
                    round_valid.push(q.clone());
                }
            }
            verdicts.extend(records.iter().cloned());
            let round_emb = self.embed(&round_valid)?;

            let mut ranked_here: Vec<(String, usize)> = Vec::new();
            if !round_valid.is_empty() {
                pool.extend(round_valid.iter().map(|q| (round, q.clone())));
                pool_emb.extend(round_emb.iter().cloned());
                let (texts, emb, rounds_of): (Vec<String>, Vec<Vec<f64>>, Vec<usize>) = if cfg.cumulative_ranking {
                    (
                        pool.iter().map(|(_, q)| q.clone()).collect(),
                        pool_emb.clone(),
                        pool.iter().map(|(r, _)| *r).collect(),
                    )
                } else {
                    (round_valid.clone(), round_emb, vec![round; round_valid.len()])
                };
                let ranking = rank_candidates_by_diversity(&references, &ref_emb, &texts, &emb, &analyzer, cfg.rrf_k)?;
                let top = ranking.order[0];
                best = Some((
                    texts[top].clone(),
                    DiversityRank {
                        round: rounds_of[top],
                        fused_rank: 1,
                        rrf_score: ranking.rrf_scores[top],
                        metric_ranks: ranking.metric_ranks_of(top),
                        pool_size: texts.len(),
                    },
                ));
                for a in &mut attempts {
                    if let Some(c) = texts.iter().position(|t| *t == a.query) {
                        a.diversity_rank = Some(ranking.fused_rank(c));
                    }
                }
                ranked_here = attempts[first_new..]
                    .iter()
                    .filter_map(|a| a.diversity_rank.map(|r| (a.query.clone(), r)))
                    .collect();
                ranked_here.sort_by_key(|(_, r)| *r);
            }
            if round < cfg.rounds {
                let (focus, text) = build_feedback(&candidates, &records, &ranked_here, self.llm, cfg.retry_limit)?;
                debug!(round, ?focus, "round feedback");
                round_guidance = Some(text).filter(|t| !t.is_empty());
            }
        }
        Ok(best.map(|(query, rank)| QueryOutcome {
            query,
            rank,
            verdicts,
            attempts,
        }))
    }
}

/// Turns a provider error into the fatal/non-fatal split used by callers.
pub fn is_fatal(e: &Error) -> bool {
    matches!(e, Error::Provider(p) if !matches!(p, ProviderError::MissingOutputFields { .. } | ProviderError::Malformed(_)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::{HashEmbedder, ScriptedLlm, SimulatedLlm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn single_skeleton() -> QuerySkeleton {
        let lib = crate::model::parse_function_library(
            r#"[{"name":"get_weather","description":"current weather for a city",
                "parameters":{"type":"object","required":["city"],"properties":{"city":{"type":"string","description":"city name"}}}}]"#,
        )
        .unwrap();
        let mut args = Map::new();
        args.insert("city".into(), Value::from("Lima"));
        QuerySkeleton {
            execution_type: ExecutionType::Single,
            functions: vec![lib.get("get_weather").unwrap().clone()],
            arguments: vec![args],
            return_values: Vec::new(),
            missing: Vec::new(),
            none_kind: None,
        }
    }

    fn batch_reply(llm: &ScriptedLlm, verdicts: &[&str]) {
        let v = json(verdicts);
        llm.push_fields(&catalog::BATCH_API_QUERY_JUDGE, &[("reasoning", "checked"), ("is_reasonable", v.as_str())]);
    }

    #[test]
    fn none_candidates_need_no_calls() {
        let llm = ScriptedLlm::new();
        let qs = vec!["a".to_string(), "b".to_string()];
        let r = judge_queries(&qs, &QuerySkeleton::none(NoneKind::NoApi), &llm, true, 3).unwrap();
        assert!(r.iter().all(|j| j.valid));
        assert!(llm.calls().is_empty());
    }

    #[test]
    fn misaligned_batch_falls_back() {
        let llm = ScriptedLlm::new();
        batch_reply(&llm, &["YES"]);
        llm.push_fields(&catalog::API_QUERY_JUDGE, &[("reasoning", "fine"), ("is_reasonable", "YES")]);
        llm.push_fields(&catalog::API_QUERY_JUDGE, &[("reasoning", "no city"), ("is_reasonable", "NO")]);
        let qs = vec!["weather in Lima?".to_string(), "hello".to_string()];
        let r = judge_queries(&qs, &single_skeleton(), &llm, true, 3).unwrap();
        assert_eq!(r.iter().map(|j| j.valid).collect::<Vec<_>>(), [true, false]);
        assert_eq!(r[1].reasoning, "no city");
    }

    #[test]
    fn feedback_threshold_is_strict() {
        let rec = |valid| JudgeRecord {
            stage: "x".into(),
            valid,
            reasoning: String::new(),
        };
        assert_eq!(feedback_focus(&vec![rec(false); 5]), FeedbackFocus::Validation);
        assert_eq!(feedback_focus(&vec![rec(true); 5]), FeedbackFocus::Diversity);
        assert_eq!(feedback_focus(&[rec(false), rec(true)]), FeedbackFocus::Diversity);
        assert_eq!(feedback_focus(&[rec(false), rec(false), rec(true)]), FeedbackFocus::Validation);
    }

    #[test]
    fn validation_feedback_carries_objections() {
        let llm = ScriptedLlm::new();
        llm.push_fields(&catalog::DIVERSITY_GUIDANCE_GENERATION, &[("reasoning", "r"), ("diversity_guidance", "name the city")]);
        let rec = JudgeRecord {
            stage: "x".into(),
            valid: false,
            reasoning: "city missing".into(),
        };
        let (focus, g) = build_feedback(&["q".into()], &[rec], &[], &llm, 3).unwrap();
        assert_eq!(focus, FeedbackFocus::Validation);
        assert_eq!(g, "name the city");
        assert!(llm.calls()[0].inputs["pattern_analysis"].contains("city missing"));
    }

    fn embed(texts: &[String]) -> Vec<Vec<f64>> {
        HashEmbedder::default().embed(texts).unwrap()
    }

    #[test]
    fn novel_candidate_outranks_duplicate() {
        let base: Vec<String> = [
            "book a flight to paris tomorrow",
            "find cheap hotels near the station",
            "what is the weather in oslo",
            "convert ten dollars to euros",
            "show train times to berlin",
        ]
        .map(String::from)
        .to_vec();
        let cands = vec![base[2].clone(), "remind me to water succulent plants every thursday".to_string()];
        let r = rank_candidates_by_diversity(&base, &embed(&base), &cands, &embed(&cands), &ShallowChunker, 60).unwrap();
        assert_eq!(r.order[0], 1);
        for m in [Metric::TypeTokenRatio, Metric::Chamfer, Metric::Vendi] {
            let i = Metric::RANKING.iter().position(|x| *x == m).unwrap();
            assert!(r.values[i][1] > r.values[i][0], "{}", m.name());
        }
    }

    #[test]
    fn ranking_ignores_candidate_order() {
        let base: Vec<String> = vec!["check my balance".into(), "pay the electricity bill".into()];
        let cands: Vec<String> = vec![
            "check my balance".into(),
            "how tall is the eiffel tower".into(),
            "transfer forty pounds to my sister tonight please".into(),
        ];
        let a = rank_candidates_by_diversity(&base, &embed(&base), &cands, &embed(&cands), &ShallowChunker, 60).unwrap();
        let rev: Vec<String> = cands.iter().rev().cloned().collect();
        let b = rank_candidates_by_diversity(&base, &embed(&base), &rev, &embed(&rev), &ShallowChunker, 60).unwrap();
        let top_a = &cands[a.order[0]];
        let top_b = &rev[b.order[0]];
        assert_eq!(top_a, top_b);
    }

    #[test]
    fn all_rejected_gives_none() {
        let llm = ScriptedLlm::new().with_fallback(Arc::new(SimulatedLlm::new()));
        llm.on(&catalog::BATCH_API_QUERY_JUDGE.name, |req| {
            let n = serde_json::from_str::<Vec<String>>(&req.inputs["queries"]).unwrap().len();
            Ok(catalog::BATCH_API_QUERY_JUDGE.format_output(&fields([
                ("reasoning", "no".to_string()),
                ("is_reasonable", json(&vec!["NO"; n])),
            ])))
        });
        let cfg = RunConfig::default();
        let env = QueryEnv {
            llm: &llm,
            embedder: &HashEmbedder::default(),
            cfg: &cfg,
            guidance: None,
        };
        let out = env.generate_query(&single_skeleton(), &[], &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(out.is_none());
        assert_eq!(llm.call_count(&catalog::MULTI_QUERY_GENERATOR.name), 5);
    }

    #[test]
    fn attempts_accumulate_and_result_is_deterministic() {
        let run = || {
            let llm = ScriptedLlm::new().with_fallback(Arc::new(SimulatedLlm::new()));
            let cfg = RunConfig::default();
            let env = QueryEnv {
                llm: &llm,
                embedder: &HashEmbedder::default(),
                cfg: &cfg,
                guidance: Some("vary the tone"),
            };
            let dataset = vec!["what's the forecast".to_string(); 3];
            let out = env.generate_query(&single_skeleton(), &dataset, &mut ChaCha8Rng::seed_from_u64(3)).unwrap().unwrap();
            (out, llm.calls())
        };
        let (a, calls) = run();
        let (b, _) = run();
        assert_eq!(a, b);
        assert!(a.attempts.iter().any(|t| t.query == a.query && t.valid));
        assert_eq!(a.rank.fused_rank, 1);
        let gens: Vec<_> = calls.iter().filter(|c| c.signature == catalog::MULTI_QUERY_GENERATOR.name).collect();
        assert_eq!(gens.len(), 5);
        assert_eq!(gens[0].inputs["previous_attempts"], "None");
        for w in gens.windows(2) {
            let earlier: Vec<Attempt> = serde_json::from_str(&w[0].inputs["previous_attempts"]).unwrap_or_default();
            let later: Vec<Attempt> = serde_json::from_str(&w[1].inputs["previous_attempts"]).unwrap();
            assert!(later.len() > earlier.len());
            for (x, y) in earlier.iter().zip(&later) {
                assert_eq!(x.query, y.query);
            }
        }
        assert!(gens[0].inputs["dataset_guidance"].contains("vary the tone"));
    }

    #[test]
    fn pattern_analysis_runs_on_period() {
        let llm = ScriptedLlm::new().with_fallback(Arc::new(SimulatedLlm::new()));
        let cfg = RunConfig::default();
        let mut mon = PatternMonitor::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut accepted = Vec::new();
        for i in 0..49 {
            accepted.push(format!("query {i}"));
            assert!(!mon.after_accept(&accepted, &cfg, &llm, &mut rng).unwrap());
        }
        assert_eq!(llm.calls().len(), 0);
        accepted.push("query 49".into());
        assert!(mon.after_accept(&accepted, &cfg, &llm, &mut rng).unwrap());
        assert!(mon.guidance.is_some());
        assert_eq!(llm.call_count(&catalog::DATASET_PATTERN_ANALYSIS.name), 1);
    }
}
