mod common;

use std::collections::BTreeSet;

use toolforge::pipeline::{Generator, RunPaths};
use toolforge::preprocess::EdgeKind;
use toolforge::providers::SimulatedLlm;
use toolforge::sampler::mean_pairwise_similarity;
use toolforge::{ExecutionType, ParamCategory, RunConfig, model::read_dataset};

use common::*;

#[test]
fn fixture_library_has_both_edge_kinds() {
    let cfg = RunConfig::default();
    let art = artifact(&cfg);
    assert_eq!(art.library.functions().len(), 12);
    let city = art
        .groups
        .iter()
        .find(|g| g.members.iter().any(|m| m.parameter == "city"))
        .unwrap();
    assert_eq!(city.members.len(), 6);
    assert_eq!(city.category, ParamCategory::String);
    assert!(art.graph.count(EdgeKind::ParamParam) >= 10);
    for (a, b) in [
        ("search_hotels", "book_hotel"),
        ("search_flights", "book_flight"),
        ("find_restaurants", "reserve_table"),
        ("list_attractions", "get_attraction_details"),
    ] {
        assert!(art.graph.has_edge(a, b, EdgeKind::ParamReturn), "{a} -> {b}");
        assert!(!art.graph.has_edge(b, a, EdgeKind::ParamReturn), "{b} -> {a}");
        let fa = art.library.get(a).unwrap();
        let fb = art.library.get(b).unwrap();
        let sim = mean_pairwise_similarity(&[fa, fb], &embedder()).unwrap().unwrap();
        assert!(sim >= 0.3, "{a}/{b} similarity {sim}");
    }
}

fn run_once(dir: &std::path::Path, cfg: &RunConfig, n: usize) -> Vec<String> {
    let art = artifact(cfg);
    let llm = SimulatedLlm::new();
    let emb = embedder();
    let paths = RunPaths::for_output(dir.join("data.jsonl"));
    let summary = Generator::new(&art, &llm, &emb, cfg).run(n, &paths, false).unwrap();
    assert_eq!(summary.accepted, n);
    lines(&paths.dataset)
}

#[test]
fn end_to_end_covers_every_type_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::default();
    let out = run_once(dir.path(), &cfg, 25);
    assert_eq!(out.len(), 25);
    let data = read_dataset(dir.path().join("data.jsonl")).unwrap();
    let lib = travel_library();
    let mut seen = BTreeSet::new();
    for ex in &data {
        ex.validate_against(&lib).unwrap();
        seen.insert(ex.execution_type);
    }
    let want: BTreeSet<_> = ExecutionType::ALL.into_iter().collect();
    assert_eq!(seen, want, "types seen: {seen:?}");
}

#[test]
fn same_seed_gives_identical_bytes() {
    let cfg = RunConfig { rng_seed: 7, ..RunConfig::default() };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run_once(a.path(), &cfg, 12), run_once(b.path(), &cfg, 12));
}

#[test]
fn resume_matches_uninterrupted_run() {
    let cfg = RunConfig { rng_seed: 11, ..RunConfig::default() };
    let full = tempfile::tempdir().unwrap();
    let expected = run_once(full.path(), &cfg, 14);

    let split = tempfile::tempdir().unwrap();
    let art = artifact(&cfg);
    let llm = SimulatedLlm::new();
    let emb = embedder();
    let paths = RunPaths::for_output(split.path().join("data.jsonl"));
    let gen = Generator::new(&art, &llm, &emb, &cfg);
    gen.run(6, &paths, false).unwrap();
    // A partial line after the last checkpoint must be discarded on resume.
    std::fs::OpenOptions::new()
        .append(true)
        .open(&paths.dataset)
        .and_then(|mut f| std::io::Write::write_all(&mut f, b"{\"id\":\"torn"))
        .ok();
    let summary = gen.run(14, &paths, true).unwrap();
    assert_eq!(summary.resumed_at, Some(6));
    assert_eq!(lines(&paths.dataset), expected);
}

struct FailsAfter {
    inner: SimulatedLlm,
    left: std::sync::atomic::AtomicUsize,
}

impl toolforge::providers::ChatProvider for FailsAfter {
    fn complete(&self, req: &toolforge::providers::ChatRequest) -> Result<String, toolforge::ProviderError> {
        use std::sync::atomic::Ordering;
        if self.left.fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1)).is_err() {
            return Err(toolforge::ProviderError::Transport("connection refused".into()));
        }
        self.inner.complete(req)
    }
}

#[test]
fn outage_mid_run_keeps_checkpointed_prefix() {
    let cfg = RunConfig { rng_seed: 3, ..RunConfig::default() };
    let art = artifact(&cfg);
    let emb = embedder();
    let dir = tempfile::tempdir().unwrap();
    let paths = RunPaths::for_output(dir.path().join("data.jsonl"));
    let llm = FailsAfter {
        inner: SimulatedLlm::new(),
        left: 400.into(),
    };
    let err = Generator::new(&art, &llm, &emb, &cfg).run(50, &paths, false).unwrap_err();
    assert!(matches!(err, toolforge::Error::Provider(_)), "{err}");
    let cp = toolforge::pipeline::Checkpoint::load(&paths.checkpoint).unwrap();
    assert!(cp.accepted > 0);
    assert_eq!(lines(&paths.dataset).len(), cp.accepted);

    // The run picks up where it stopped once the provider is back.
    let healthy = SimulatedLlm::new();
    let summary = Generator::new(&art, &healthy, &emb, &cfg).run(cp.accepted + 2, &paths, true).unwrap();
    assert_eq!(summary.resumed_at, Some(cp.accepted));
}
