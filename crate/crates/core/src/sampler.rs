//! Execution-type and target-function sampling.

use rand::Rng;
use rand::distr::Distribution;
use rand::distr::weighted::WeightedIndex;
use rand_distr::Poisson;
use serde_json::Value;

use crate::config::{MixtureWeights, RunConfig};
use crate::error::{Error, Result};
use crate::metrics::semantic::similarity_matrix;
use crate::model::{ExecutionType, FunctionSchema, JudgeRecord};
use crate::preprocess::{ApiGraph, ApiPools, EdgeKind, PreprocessArtifact};
use crate::providers::{ChatProvider, Embedder, call_signature, catalog, fields, parse_yes_no};

pub fn sample_execution_type(weights: &MixtureWeights, rng: &mut impl Rng) -> Result<ExecutionType> {
    let w = ExecutionType::ALL.map(|t| weights.weight(t));
    let dist = WeightedIndex::new(w).map_err(|e| Error::Config(format!("mixture weights: {e}")))?;
    Ok(ExecutionType::ALL[dist.sample(rng)])
}

/// Uniform pool, then uniform function within it. Empty pools are re-drawn.
pub fn sample_single_api(pools: &ApiPools, rng: &mut impl Rng) -> Result<String> {
    let all = pools.all();
    if all.iter().all(|p| p.is_empty()) {
        return Err(Error::Sampling("every API pool is empty".into()));
    }
    loop {
        let pool = all[rng.random_range(0..all.len())];
        if !pool.is_empty() {
            return Ok(pool[rng.random_range(0..pool.len())].clone());
        }
    }
}

/// Walk length: Poisson(lambda) + 2.
pub fn sample_walk_length(lambda: f64, rng: &mut impl Rng) -> Result<usize> {
    if lambda == 0.0 {
        return Ok(2);
    }
    let p = Poisson::new(lambda).map_err(|e| Error::Config(format!("walk lambda: {e}")))?;
    Ok(p.sample(rng) as usize + 2)
}

/// Next-step options from `v`: neighbor, combined weight, and whether a
/// forward P-R edge links them.
fn steps(graph: &ApiGraph, v: usize, exec: ExecutionType, bias: f64) -> Vec<(usize, f64, bool)> {
    let favored = if exec == ExecutionType::Sequential {
        EdgeKind::ParamReturn
    } else {
        EdgeKind::ParamParam
    };
    let undirected = exec != ExecutionType::Sequential;
    let mut out: Vec<(usize, f64, bool)> = Vec::new();
    for (to, kind, w) in graph.out_edges(v, undirected) {
        let w = if kind == favored { w * bias } else { w };
        let forward_pr = kind == EdgeKind::ParamReturn && graph.edges.iter().any(|e| e.kind == kind && e.from == v && e.to == to);
        match out.iter_mut().find(|(n, _, _)| *n == to) {
            Some(slot) => {
                slot.1 += w;
                slot.2 |= forward_pr;
            }
            None => out.push((to, w, forward_pr)),
        }
    }
    out
}

/// A simple biased walk of exactly `len` vertices. Each attempt restarts from
/// a uniformly drawn vertex that has usable edges; a SEQUENTIAL walk must
/// cross at least one P-R edge in its direction.
pub fn walk_of_length(
    graph: &ApiGraph,
    exec: ExecutionType,
    len: usize,
    bias: f64,
    retries: usize,
    rng: &mut impl Rng,
) -> Result<Vec<String>> {
    if !exec.is_multi() {
        return Err(Error::invalid(format!("walks are for PARALLEL or SEQUENTIAL, not {exec}")));
    }
    let starts: Vec<usize> = (0..graph.vertices.len())
        .filter(|&v| !steps(graph, v, exec, bias).is_empty())
        .collect();
    if starts.is_empty() {
        return Err(Error::Sampling(format!("graph has no edges usable for {exec}")));
    }
    'attempt: for _ in 0..retries.max(1) {
        let mut path = vec![starts[rng.random_range(0..starts.len())]];
        let mut used_pr = false;
        while path.len() < len {
            let options: Vec<(usize, f64, bool)> = steps(graph, *path.last().unwrap(), exec, bias)
                .into_iter()
                .filter(|(n, _, _)| !path.contains(n))
                .collect();
            if options.is_empty() {
                continue 'attempt;
            }
            let dist = WeightedIndex::new(options.iter().map(|o| o.1)).map_err(|e| Error::Sampling(e.to_string()))?;
            let (next, _, pr) = options[dist.sample(rng)];
            used_pr |= pr;
            path.push(next);
        }
        if exec == ExecutionType::Sequential && !used_pr {
            continue;
        }
        return Ok(path.into_iter().map(|i| graph.vertices[i].clone()).collect());
    }
    Err(Error::Sampling(format!("no {exec} walk of length {len} after {} attempts", retries.max(1))))
}

pub fn sample_walk(
    graph: &ApiGraph,
    exec: ExecutionType,
    lambda: f64,
    bias: f64,
    retries: usize,
    rng: &mut impl Rng,
) -> Result<Vec<String>> {
    let len = sample_walk_length(lambda, rng)?;
    walk_of_length(graph, exec, len, bias, retries, rng)
}

/// Text embedded for a whole function when checking coherence.
pub fn function_text(f: &FunctionSchema) -> String {
    format!("{}: {}", f.name, f.description)
}

/// Mean pairwise cosine of the functions' descriptions. `None` for fewer than two.
pub fn mean_pairwise_similarity(functions: &[&FunctionSchema], embedder: &dyn Embedder) -> Result<Option<f64>> {
    let n = functions.len();
    if n < 2 {
        return Ok(None);
    }
    let texts: Vec<String> = functions.iter().map(|f| function_text(f)).collect();
    let sim = similarity_matrix(&embedder.embed(&texts)?)?;
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += sim[i][j];
        }
    }
    Ok(Some(total / (n * (n - 1) / 2) as f64))
}

pub fn check_pairwise_similarity(functions: &[&FunctionSchema], embedder: &dyn Embedder, threshold: f64) -> Result<bool> {
    Ok(mean_pairwise_similarity(functions, embedder)?.is_none_or(|m| m >= threshold))
}

pub fn schemas_json(functions: &[&FunctionSchema]) -> String {
    Value::Array(functions.iter().map(|f| f.to_json()).collect()).to_string()
}

/// Asks the model whether the chain is data-compatible before any argument is
/// generated. An unparseable reply after retries is a sampling failure.
pub fn validate_sequential_schema_compatibility(
    functions: &[&FunctionSchema],
    llm: &dyn ChatProvider,
    retries: usize,
) -> Result<JudgeRecord> {
    if functions.len() < 2 {
        return Err(Error::invalid("a sequential chain needs at least two functions"));
    }
    let sig = &*catalog::VALIDATE_SEQUENTIAL_SCHEMA_COMPATIBILITY;
    let out = call_signature(llm, sig, &fields([("api_schemas", schemas_json(functions))]), retries)
        .map_err(|e| Error::Sampling(format!("schema compatibility check failed: {e}")))?;
    let valid = parse_yes_no(&out["is_compatible"]).map_err(|e| Error::Sampling(e.to_string()))?;
    Ok(JudgeRecord {
        stage: sig.name.clone(),
        valid,
        reasoning: out["reasoning"].clone(),
    })
}

/// Chosen targets plus any verdicts gathered while choosing them.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetDraw {
    pub functions: Vec<String>,
    pub verdicts: Vec<JudgeRecord>,
}

/// Draws target functions for one example. Rejections surface as
/// `Error::Sampling` so the caller can redraw.
pub fn sample_targets(
    exec: ExecutionType,
    artifact: &PreprocessArtifact,
    embedder: &dyn Embedder,
    llm: &dyn ChatProvider,
    cfg: &RunConfig,
    rng: &mut impl Rng,
) -> Result<TargetDraw> {
    let lib = &artifact.library;
    let mut verdicts = Vec::new();
    let functions = match exec {
        ExecutionType::None => Vec::new(),
        ExecutionType::Single => vec![sample_single_api(&artifact.pools, rng)?],
        ExecutionType::MissingParams => {
            let mut found = None;
            for _ in 0..cfg.walk_retries {
                let name = sample_single_api(&artifact.pools, rng)?;
                if lib.get(&name).is_some_and(|f| f.required_parameters().next().is_some()) {
                    found = Some(name);
                    break;
                }
            }
            vec![found.ok_or_else(|| Error::Sampling("no function with required parameters drawn".into()))?]
        }
        ExecutionType::Parallel | ExecutionType::Sequential => {
            let names = sample_walk(&artifact.graph, exec, cfg.walk_lambda, cfg.walk_bias, cfg.walk_retries, rng)?;
            let schemas: Vec<&FunctionSchema> = names.iter().filter_map(|n| lib.get(n)).collect();
            if !check_pairwise_similarity(&schemas, embedder, cfg.pairwise_similarity_threshold)? {
                return Err(Error::Sampling(format!("functions {names:?} are not similar enough")));
            }
            if exec == ExecutionType::Sequential {
                let v = validate_sequential_schema_compatibility(&schemas, llm, cfg.retry_limit)?;
                let ok = v.valid;
                verdicts.push(v);
                if !ok {
                    return Err(Error::Sampling(format!("chain {names:?} judged incompatible")));
                }
            }
            names
        }
    };
    Ok(TargetDraw { functions, verdicts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::ApiEdge;
    use crate::providers::ScriptedLlm;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn graph(n: usize, edges: &[(usize, usize, EdgeKind)]) -> ApiGraph {
        ApiGraph {
            vertices: (0..n).map(|i| format!("f{i}")).collect(),
            edges: edges
                .iter()
                .map(|&(from, to, kind)| ApiEdge { from, to, kind, weight: 0.8 })
                .collect(),
        }
    }

    #[test]
    fn single_type_weights() {
        let w = MixtureWeights::only(ExecutionType::Parallel);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!((0..100).all(|_| sample_execution_type(&w, &mut rng).unwrap() == ExecutionType::Parallel));
        let zero = MixtureWeights { single: 0.0, ..MixtureWeights::only(ExecutionType::Parallel) };
        let zero = MixtureWeights { parallel: 0.0, ..zero };
        assert!(matches!(sample_execution_type(&zero, &mut rng), Err(Error::Config(_))));
    }

    #[test]
    fn equal_weights_are_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0usize; 5];
        for _ in 0..1000 {
            let t = sample_execution_type(&MixtureWeights::default(), &mut rng).unwrap();
            counts[ExecutionType::ALL.iter().position(|&x| x == t).unwrap()] += 1;
        }
        assert!(counts.iter().all(|&c| c.abs_diff(200) <= 50), "{counts:?}");
    }

    #[test]
    fn empty_pools() {
        let p = ApiPools { general: vec![], focused: vec![], other: vec![] };
        assert!(sample_single_api(&p, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        let p = ApiPools { general: vec!["a".into(), "b".into()], focused: vec![], other: vec![] };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut seen = std::collections::HashSet::new();
        for _ in 0..50 {
            seen.insert(sample_single_api(&p, &mut rng).unwrap());
        }
        assert_eq!(seen.len(), 2);
    }

    #[test]
    fn length_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 20_000;
        let twos = (0..n).filter(|_| sample_walk_length(0.75, &mut rng).unwrap() == 2).count();
        assert!((twos as f64 / n as f64 - (-0.75f64).exp()).abs() < 0.02);
    }

    #[test]
    fn forced_sequential_path() {
        let g = graph(2, &[(0, 1, EdgeKind::ParamReturn)]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            assert_eq!(walk_of_length(&g, ExecutionType::Sequential, 2, 3.0, 8, &mut rng).unwrap(), ["f0", "f1"]);
        }
        assert!(walk_of_length(&g, ExecutionType::Sequential, 3, 3.0, 8, &mut rng).is_err());
    }

    #[test]
    fn sequential_needs_a_return_edge() {
        let g = graph(3, &[(0, 1, EdgeKind::ParamParam), (1, 2, EdgeKind::ParamParam)]);
        assert!(walk_of_length(&g, ExecutionType::Sequential, 2, 3.0, 8, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        assert!(walk_of_length(&g, ExecutionType::Parallel, 3, 3.0, 64, &mut ChaCha8Rng::seed_from_u64(0)).is_ok());
    }

    #[test]
    fn walks_are_reproducible_and_simple() {
        let g = graph(3, &[(0, 1, EdgeKind::ParamParam), (1, 2, EdgeKind::ParamParam), (0, 2, EdgeKind::ParamParam)]);
        let a = sample_walk(&g, ExecutionType::Parallel, 0.75, 3.0, 32, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_walk(&g, ExecutionType::Parallel, 0.75, 3.0, 32, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        let mut d = a.clone();
        d.sort();
        d.dedup();
        assert_eq!(d.len(), a.len());
    }

    fn f(name: &str, desc: &str) -> FunctionSchema {
        FunctionSchema { name: name.into(), description: desc.into(), parameters: vec![], return_schema: None }
    }

    #[test]
    fn pairwise_similarity_gate() {
        let e = crate::providers::HashEmbedder::default();
        let (a, b) = (f("x", "same words"), f("x", "same words"));
        assert!(check_pairwise_similarity(&[&a, &b], &e, 1.0 - 1e-9).unwrap());
        let (c, d) = (f("weather", "forecast tomorrow"), f("currency", "exchange rate"));
        assert_eq!(mean_pairwise_similarity(&[&c, &d], &e).unwrap(), Some(0.0));
        assert!(!check_pairwise_similarity(&[&c, &d], &e, 0.3).unwrap());
        assert!(check_pairwise_similarity(&[&c], &e, 0.9).unwrap());
    }

    #[test]
    fn compatibility_retry_after_missing_marker() {
        let llm = ScriptedLlm::new();
        let sig = &*catalog::VALIDATE_SEQUENTIAL_SCHEMA_COMPATIBILITY;
        llm.push(&sig.name, "[[ ## is_compatible ## ]]\nYES\n[[ ## completed ## ]]");
        llm.push_fields(sig, &[("reasoning", "ids flow through"), ("is_compatible", "YES")]);
        let (a, b) = (f("a", ""), f("b", ""));
        let v = validate_sequential_schema_compatibility(&[&a, &b], &llm, 3).unwrap();
        assert!(v.valid);
        assert_eq!(llm.call_count(&sig.name), 2);
    }
}
