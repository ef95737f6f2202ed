//! Dataset comparisons and model-output evaluation.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use tracing::warn;

use crate::error::{Error, Result};
use crate::metrics::stats::{Bootstrap, Direction, MCNEMAR_EXACT_THRESHOLD, subsample_indices};
use crate::metrics::{
    CorpusView, Metric, ShallowChunker, compute_metric_on, holm_bonferroni, mcnemar, ncd_diversity, significance,
    value_cluster_entropy,
};
use crate::model::{FunctionLibrary, FunctionSchema, GeneratedExample, MISSING_SENTINEL, ParamCategory};
use crate::paramgen::value_text;
use crate::preprocess::{ParamRef, ParameterGroup, group_parameters};
use crate::providers::{ChatProvider, Embedder, ask_yes_no, catalog, fields};

/// Mean and bootstrap standard deviation of one metric on one corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub size: usize,
    pub metrics: IndexMap<String, Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub metric: String,
    pub a: Estimate,
    pub b: Estimate,
    pub significant: bool,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub size_a: usize,
    pub size_b: usize,
    pub rows: Vec<ComparisonRow>,
}

impl DiversityReport {
    /// Metrics where corpus B is significantly higher.
    pub fn b_wins(&self) -> Vec<&str> {
        self.rows
            .iter()
            .filter(|r| r.significant && r.direction == Direction::SecondHigher)
            .map(|r| r.metric.as_str())
            .collect()
    }

    pub fn to_table(&self) -> String {
        let mut t = format!("{:<22} {:>20} {:>20}  sig\n", "metric", format!("A (n={})", self.size_a), format!("B (n={})", self.size_b));
        for r in &self.rows {
            let mark = match (r.significant, r.direction) {
                (true, Direction::FirstHigher) => "A",
                (true, Direction::SecondHigher) => "B",
                _ => "-",
            };
            let _ = writeln!(t, "{:<22} {:>20} {:>20}  {mark}", r.metric, fmt_est(r.a), fmt_est(r.b));
        }
        t
    }
}

impl CorpusReport {
    pub fn to_table(&self) -> String {
        let mut t = format!("{:<22} {:>20}\n", "metric", format!("n={}", self.size));
        for (m, e) in &self.metrics {
            let _ = writeln!(t, "{m:<22} {:>20}", fmt_est(*e));
        }
        t
    }
}

fn fmt_est(e: Estimate) -> String {
    format!("{:.4} ± {:.4}", e.mean, e.std)
}

/// All twelve metrics on one corpus, each with its bootstrap deviation.
pub fn analyze_corpus(texts: &[String], embedder: &dyn Embedder, boot: Bootstrap) -> Result<CorpusReport> {
    if texts.len() < 2 {
        return Err(Error::invalid("corpus analysis needs at least two texts"));
    }
    let embeddings = embedder.embed(texts)?;
    let view = CorpusView::new(texts, &embeddings)?;
    let analyzer = ShallowChunker;
    let all: Vec<usize> = (0..texts.len()).collect();
    let estimates = Metric::ALL
        .par_iter()
        .map(|&m| {
            let mean = compute_metric_on(m, view, &all, &analyzer)?;
            let std = crate::metrics::bootstrap_std(&all, |idx| compute_metric_on(m, view, idx, &analyzer), boot)?;
            Ok((m.name().to_string(), Estimate { mean, std }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CorpusReport {
        size: texts.len(),
        metrics: estimates.into_iter().collect(),
    })
}

pub fn compare_reports(a: &CorpusReport, b: &CorpusReport) -> DiversityReport {
    let rows = a
        .metrics
        .iter()
        .filter_map(|(m, ea)| {
            let eb = b.metrics.get(m)?;
            let s = significance(ea.mean, ea.std, eb.mean, eb.std);
            Some(ComparisonRow {
                metric: m.clone(),
                a: *ea,
                b: *eb,
                significant: s.significant,
                direction: s.direction,
            })
        })
        .collect();
    DiversityReport {
        size_a: a.size,
        size_b: b.size,
        rows,
    }
}

pub fn compare_linguistic_diversity(a: &[String], b: &[String], embedder: &dyn Embedder, boot: Bootstrap) -> Result<DiversityReport> {
    Ok(compare_reports(&analyze_corpus(a, embedder, boot)?, &analyze_corpus(b, embedder, boot)?))
}

/// Argument values per parameter, in dataset order. Sentinels are skipped.
fn argument_values(examples: &[GeneratedExample]) -> HashMap<ParamRef, Vec<String>> {
    let mut out: HashMap<ParamRef, Vec<String>> = HashMap::new();
    for ex in examples {
        for inv in &ex.target_invocations {
            for (k, v) in &inv.arguments {
                if v.as_str() == Some(MISSING_SENTINEL) {
                    continue;
                }
                out.entry(ParamRef::new(&inv.function_name, k)).or_default().push(value_text(v));
            }
        }
    }
    out
}

/// Value counts per parameter group, most frequent first (ties by value).
pub fn frequency_table(examples: &[GeneratedExample], groups: &[ParameterGroup]) -> IndexMap<String, Vec<(String, usize)>> {
    let values = argument_values(examples);
    let mut table = IndexMap::new();
    for g in groups {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for m in &g.members {
            for v in values.get(m).into_iter().flatten() {
                *counts.entry(v.clone()).or_default() += 1;
            }
        }
        if counts.is_empty() {
            continue;
        }
        let mut rows: Vec<(String, usize)> = counts.into_iter().collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        table.insert(group_label(g), rows);
    }
    table
}

fn group_label(g: &ParameterGroup) -> String {
    let m = &g.members[0];
    format!("{}.{}", m.function, m.parameter)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgumentRow {
    pub group: String,
    pub category: ParamCategory,
    pub ncd_a: Estimate,
    pub ncd_b: Estimate,
    pub entropy_a: Estimate,
    pub entropy_b: Estimate,
    pub ncd_significant: bool,
    pub entropy_significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgumentReport {
    pub rows: Vec<ArgumentRow>,
    pub average: Option<ArgumentRow>,
}

impl ArgumentReport {
    pub fn to_table(&self) -> String {
        let mut t = format!(
            "{:<32} {:>18} {:>18} {:>18} {:>18}\n",
            "group", "NCD A", "NCD B", "entropy A", "entropy B"
        );
        for r in self.rows.iter().chain(&self.average) {
            let star = |s: bool| if s { "*" } else { " " };
            let _ = writeln!(
                t,
                "{:<32} {:>18} {:>17}{} {:>18} {:>17}{}",
                r.group,
                fmt_est(r.ncd_a),
                fmt_est(r.ncd_b),
                star(r.ncd_significant),
                fmt_est(r.entropy_a),
                fmt_est(r.entropy_b),
                star(r.entropy_significant)
            );
        }
        t
    }
}

pub const ARGUMENT_SAMPLE: usize = 20;

fn prefixed(lib: &FunctionLibrary, tag: &str) -> Vec<FunctionSchema> {
    lib.iter()
        .map(|f| FunctionSchema {
            name: format!("{tag}::{}", f.name),
            ..f.clone()
        })
        .collect()
}

fn estimate(values: &[String], metric: impl Fn(&[String]) -> Result<f64>, boot: Bootstrap) -> Result<Estimate> {
    Ok(Estimate {
        mean: metric(values)?,
        std: crate::metrics::bootstrap_std(values, metric, boot)?,
    })
}

/// Groups parameters of both libraries jointly, keeps STRING and NUMERICAL
/// groups with at least twenty values on each side, and compares a uniform
/// twenty-value sample per side by NCD and cluster entropy.
pub fn compare_argument_diversity(
    a: &[GeneratedExample],
    lib_a: &FunctionLibrary,
    b: &[GeneratedExample],
    lib_b: &FunctionLibrary,
    embedder: &dyn Embedder,
    threshold: f64,
    boot: Bootstrap,
) -> Result<ArgumentReport> {
    let mut joint = prefixed(lib_a, "A");
    joint.extend(prefixed(lib_b, "B"));
    let joint = FunctionLibrary::new(joint)?;
    let groups = group_parameters(&joint, embedder, threshold)?;
    let (va, vb) = (argument_values(a), argument_values(b));
    let collect = |vals: &HashMap<ParamRef, Vec<String>>, g: &ParameterGroup, tag: &str| -> Vec<String> {
        g.members
            .iter()
            .filter_map(|m| m.function.strip_prefix(tag).map(|f| ParamRef::new(f, &m.parameter)))
            .flat_map(|r| vals.get(&r).cloned().unwrap_or_default())
            .collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(boot.seed);
    let mut rows = Vec::new();
    for g in &groups {
        if !matches!(g.category, ParamCategory::String | ParamCategory::Numerical) {
            continue;
        }
        let (xa, xb) = (collect(&va, g, "A::"), collect(&vb, g, "B::"));
        if xa.len() < ARGUMENT_SAMPLE || xb.len() < ARGUMENT_SAMPLE {
            continue;
        }
        let sample = |xs: &[String], rng: &mut ChaCha8Rng| -> Vec<String> {
            let mut idx = subsample_indices(rng, xs.len(), ARGUMENT_SAMPLE);
            idx.sort_unstable();
            idx.into_iter().map(|i| xs[i].clone()).collect()
        };
        let (sa, sb) = (sample(&xa, &mut rng), sample(&xb, &mut rng));
        let cat = g.category;
        let ce = |v: &[String]| value_cluster_entropy(v, cat, embedder);
        let ncd = |v: &[String]| ncd_diversity(v);
        let (ncd_a, ncd_b) = (estimate(&sa, ncd, boot)?, estimate(&sb, ncd, boot)?);
        let (entropy_a, entropy_b) = (estimate(&sa, ce, boot)?, estimate(&sb, ce, boot)?);
        let label = group_label(g);
        rows.push(ArgumentRow {
            group: label.split_once("::").map_or(label.clone(), |(_, rest)| rest.to_string()),
            category: cat,
            ncd_significant: significance(ncd_a.mean, ncd_a.std, ncd_b.mean, ncd_b.std).significant,
            entropy_significant: significance(entropy_a.mean, entropy_a.std, entropy_b.mean, entropy_b.std).significant,
            ncd_a,
            ncd_b,
            entropy_a,
            entropy_b,
        });
    }
    if rows.is_empty() {
        warn!("no parameter group has {ARGUMENT_SAMPLE} values in both datasets");
        return Ok(ArgumentReport { rows, average: None });
    }
    let avg = |f: fn(&ArgumentRow) -> Estimate| {
        let n = rows.len() as f64;
        Estimate {
            mean: rows.iter().map(|r| f(r).mean).sum::<f64>() / n,
            std: rows.iter().map(|r| f(r).std.powi(2)).sum::<f64>().sqrt() / n,
        }
    };
    let (ncd_a, ncd_b) = (avg(|r| r.ncd_a), avg(|r| r.ncd_b));
    let (entropy_a, entropy_b) = (avg(|r| r.entropy_a), avg(|r| r.entropy_b));
    let average = ArgumentRow {
        group: "average".into(),
        category: ParamCategory::Other,
        ncd_significant: significance(ncd_a.mean, ncd_a.std, ncd_b.mean, ncd_b.std).significant,
        entropy_significant: significance(entropy_a.mean, entropy_a.std, entropy_b.mean, entropy_b.std).significant,
        ncd_a,
        ncd_b,
        entropy_a,
        entropy_b,
    };
    Ok(ArgumentReport {
        rows,
        average: Some(average),
    })
}

/// Asks the model whether a predicted call has the same effect as the reference.
pub fn judge_tool_call_equivalence(
    query: &str,
    schema: &Value,
    ground_truth: &Value,
    predicted: &Value,
    llm: &dyn ChatProvider,
    retries: usize,
) -> Result<(bool, String)> {
    let inputs = fields([
        ("user_query", query.to_string()),
        ("tool_schema", serde_json::to_string(schema)?),
        ("ground_truth_call", serde_json::to_string(ground_truth)?),
        ("predicted_call", serde_json::to_string(predicted)?),
    ]);
    Ok(ask_yes_no(llm, &catalog::TOOL_CALL_EQUIVALENCE, &inputs, "equivalent", retries)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    None,
    #[default]
    Holm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub category: String,
    pub n: usize,
    pub accuracy_a: f64,
    pub accuracy_b: f64,
    /// Items A got right and B got wrong.
    pub only_a: u64,
    /// Items B got right and A got wrong.
    pub only_b: u64,
    pub p_value: f64,
    pub significant: bool,
}

fn accuracy(labels: &[bool]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    labels.iter().filter(|&&x| x).count() as f64 / labels.len() as f64
}

/// McNemar comparison of two models' correctness on the same items.
pub fn paired_model_comparison(category: &str, a: &[bool], b: &[bool], alpha: f64) -> Result<PairedComparison> {
    if a.len() != b.len() {
        return Err(Error::invalid("paired label vectors differ in length"));
    }
    let only_a = a.iter().zip(b).filter(|(x, y)| **x && !**y).count() as u64;
    let only_b = a.iter().zip(b).filter(|(x, y)| !**x && **y).count() as u64;
    let p = mcnemar(only_a, only_b, MCNEMAR_EXACT_THRESHOLD);
    Ok(PairedComparison {
        category: category.to_string(),
        n: a.len(),
        accuracy_a: accuracy(a),
        accuracy_b: accuracy(b),
        only_a,
        only_b,
        p_value: p,
        significant: p <= alpha,
    })
}

/// Per-category comparisons, with significance corrected across categories.
pub fn paired_category_comparison(
    categories: &[(String, Vec<bool>, Vec<bool>)],
    alpha: f64,
    correction: Correction,
) -> Result<Vec<PairedComparison>> {
    let mut rows = categories
        .iter()
        .map(|(c, a, b)| paired_model_comparison(c, a, b, alpha))
        .collect::<Result<Vec<_>>>()?;
    if correction == Correction::Holm {
        let p: Vec<f64> = rows.iter().map(|r| r.p_value).collect();
        for (r, keep) in rows.iter_mut().zip(holm_bonferroni(&p, alpha)) {
            r.significant = keep;
        }
    }
    Ok(rows)
}

/// One function call as it appears in predictions and references.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Call {
    #[serde(alias = "function_name")]
    pub name: String,
    #[serde(default)]
    pub arguments: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceItem {
    pub id: String,
    #[serde(default)]
    pub query: String,
    #[serde(alias = "target_invocations", default)]
    pub calls: Vec<Call>,
    #[serde(alias = "execution_type", default)]
    pub category: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionItem {
    pub id: String,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default)]
    pub calls: Vec<Call>,
}

fn default_model() -> String {
    "model".into()
}

fn canonical(c: &Call) -> String {
    serde_json::to_string(&(&c.name, &c.arguments)).expect("JSON values serialize")
}

/// Same calls regardless of order.
pub fn calls_match(a: &[Call], b: &[Call]) -> bool {
    let mut x: Vec<String> = a.iter().map(canonical).collect();
    let mut y: Vec<String> = b.iter().map(canonical).collect();
    x.sort();
    y.sort();
    x == y
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelAccuracy {
    pub model: String,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub models: Vec<ModelAccuracy>,
    /// Overall comparison first, then one row per category.
    pub comparisons: Vec<PairedComparison>,
    pub baseline: String,
    pub challenger: String,
}

impl EvaluationReport {
    pub fn to_table(&self) -> String {
        let mut t = String::new();
        for m in &self.models {
            let _ = writeln!(t, "{:<24} {:>6}/{:<6} {:.4}", m.model, m.correct, m.total, m.accuracy);
        }
        let _ = writeln!(t, "\n{} vs {}", self.baseline, self.challenger);
        let _ = writeln!(t, "{:<20} {:>6} {:>8} {:>8} {:>5} {:>5} {:>10}  sig", "category", "n", "acc A", "acc B", "b", "c", "p");
        for r in &self.comparisons {
            let _ = writeln!(
                t,
                "{:<20} {:>6} {:>8.4} {:>8.4} {:>5} {:>5} {:>10.4}  {}",
                r.category,
                r.n,
                r.accuracy_a,
                r.accuracy_b,
                r.only_a,
                r.only_b,
                r.p_value,
                if r.significant { "*" } else { "-" }
            );
        }
        t
    }
}

/// Scores each model's predictions against the references. Items without a
/// prediction count as wrong. With an equivalence judge, calls that differ
/// textually are accepted when every aligned pair is judged equivalent.
/// Two or more models are compared pairwise (first against second); a single
/// model is compared against the references themselves.
pub fn evaluate_predictions(
    references: &[ReferenceItem],
    predictions: &[PredictionItem],
    alpha: f64,
    correction: Correction,
    judge: Option<(&dyn ChatProvider, &FunctionLibrary, usize)>,
) -> Result<EvaluationReport> {
    let mut models: Vec<String> = Vec::new();
    for p in predictions {
        if !models.contains(&p.model) {
            models.push(p.model.clone());
        }
    }
    if models.is_empty() {
        return Err(Error::invalid("no predictions to evaluate"));
    }
    let by_key: HashMap<(&str, &str), &PredictionItem> =
        predictions.iter().map(|p| ((p.model.as_str(), p.id.as_str()), p)).collect();
    let correct_for = |model: &str| -> Result<Vec<bool>> {
        references
            .iter()
            .map(|r| {
                let Some(p) = by_key.get(&(model, r.id.as_str())) else {
                    return Ok(false);
                };
                if calls_match(&r.calls, &p.calls) {
                    return Ok(true);
                }
                let Some((llm, lib, retries)) = judge else {
                    return Ok(false);
                };
                if r.calls.len() != p.calls.len() || r.calls.is_empty() {
                    return Ok(false);
                }
                for (gt, pr) in r.calls.iter().zip(&p.calls) {
                    let schema = lib.get(&gt.name).map(FunctionSchema::to_json).unwrap_or(Value::Null);
                    let (eq, _) = judge_tool_call_equivalence(
                        &r.query,
                        &schema,
                        &serde_json::to_value(gt)?,
                        &serde_json::to_value(pr)?,
                        llm,
                        retries,
                    )?;
                    if !eq {
                        return Ok(false);
                    }
                }
                Ok(true)
            })
            .collect()
    };
    let labels: Vec<Vec<bool>> = models.iter().map(|m| correct_for(m)).collect::<Result<_>>()?;
    let summary = models
        .iter()
        .zip(&labels)
        .map(|(m, l)| ModelAccuracy {
            model: m.clone(),
            correct: l.iter().filter(|&&x| x).count(),
            total: l.len(),
            accuracy: accuracy(l),
        })
        .collect();
    let (baseline, challenger, a, b) = if labels.len() >= 2 {
        (models[0].clone(), models[1].clone(), labels[0].clone(), labels[1].clone())
    } else {
        ("reference".to_string(), models[0].clone(), vec![true; references.len()], labels[0].clone())
    };
    let mut comparisons = vec![paired_model_comparison("all", &a, &b, alpha)?];
    let mut cats: IndexMap<String, (Vec<bool>, Vec<bool>)> = IndexMap::new();
    for (i, r) in references.iter().enumerate() {
        if let Some(c) = &r.category {
            let e = cats.entry(c.clone()).or_default();
            e.0.push(a[i]);
            e.1.push(b[i]);
        }
    }
    if cats.len() > 1 {
        let per: Vec<(String, Vec<bool>, Vec<bool>)> = cats.into_iter().map(|(k, (x, y))| (k, x, y)).collect();
        comparisons.extend(paired_category_comparison(&per, alpha, correction)?);
    }
    Ok(EvaluationReport {
        models: summary,
        comparisons,
        baseline,
        challenger,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::{HashEmbedder, ScriptedLlm, SimulatedLlm};
    use serde_json::json;

    fn boot() -> Bootstrap {
        Bootstrap {
            resamples: 20,
            fraction: 0.8,
            seed: 7,
        }
    }

    #[test]
    fn corpus_against_itself_is_never_significant() {
        let texts: Vec<String> = (0..12).map(|i| format!("please find flights number {i} to somewhere warm")).collect();
        let r = compare_linguistic_diversity(&texts, &texts, &HashEmbedder::default(), boot()).unwrap();
        assert_eq!(r.rows.len(), 12);
        assert!(r.rows.iter().all(|x| !x.significant));
        for row in &r.rows {
            assert_eq!(
                significance(row.a.mean, row.a.std, row.b.mean, row.b.std).significant,
                row.significant
            );
        }
    }

    #[test]
    fn paired_counts_and_pvalue() {
        let mut a = vec![true; 5];
        a.extend(vec![false; 15]);
        let b: Vec<bool> = a.iter().map(|x| !x).collect();
        let r = paired_model_comparison("all", &a, &b, 0.05).unwrap();
        assert_eq!((r.only_a, r.only_b), (5, 15));
        assert!((r.p_value - 0.0414).abs() < 5e-4);
        let same = paired_model_comparison("all", &a, &a, 0.05).unwrap();
        assert_eq!(same.p_value, 1.0);
    }

    #[test]
    fn identical_predictions_score_perfectly() {
        let refs = vec![ReferenceItem {
            id: "1".into(),
            query: "q".into(),
            calls: vec![Call {
                name: "f".into(),
                arguments: Map::new(),
            }],
            category: None,
        }];
        let preds = vec![PredictionItem {
            id: "1".into(),
            model: "m".into(),
            calls: refs[0].calls.clone(),
        }];
        let r = evaluate_predictions(&refs, &preds, 0.05, Correction::Holm, None).unwrap();
        assert_eq!(r.models[0].accuracy, 1.0);
        assert_eq!(r.comparisons[0].p_value, 1.0);
    }

    #[test]
    fn equivalence_judge_verdicts() {
        let sim = SimulatedLlm::new();
        let call = json!({"name": "get_weather", "arguments": {"location": "New York"}});
        assert!(judge_tool_call_equivalence("weather?", &json!({}), &call, &call, &sim, 3).unwrap().0);
        let other = json!({"name": "get_time", "arguments": {"location": "New York"}});
        assert!(!judge_tool_call_equivalence("weather?", &json!({}), &call, &other, &sim, 3).unwrap().0);

        let llm = ScriptedLlm::new();
        llm.push_fields(
            &catalog::TOOL_CALL_EQUIVALENCE,
            &[("reasoning", "an abbreviation of the same city"), ("equivalent", "YES")],
        );
        let nyc = json!({"name": "get_weather", "arguments": {"location": "NYC"}});
        assert!(judge_tool_call_equivalence("weather in nyc", &json!({}), &call, &nyc, &llm, 3).unwrap().0);
    }

    #[test]
    fn argument_groups_need_twenty_values() {
        let lib = crate::model::parse_function_library(
            r#"[{"name":"f","description":"d","parameters":{"type":"object","properties":{
                "city":{"type":"string","description":"name of a city somewhere in the world"}}}}]"#,
        )
        .unwrap();
        let ex = |i: usize, v: &str| GeneratedExample {
            id: format!("e{i}"),
            execution_type: crate::ExecutionType::Single,
            query: "q".into(),
            target_invocations: vec![crate::Invocation {
                function_name: "f".into(),
                arguments: [("city".to_string(), Value::from(v))].into_iter().collect(),
                order_index: 0,
            }],
            return_values: vec![],
            candidate_functions: vec!["f".into()],
            metadata: Default::default(),
        };
        let same: Vec<GeneratedExample> = (0..25).map(|i| ex(i, "paris")).collect();
        let distinct: Vec<GeneratedExample> = (0..25).map(|i| ex(i, &format!("town{i}"))).collect();
        let e = HashEmbedder::default();
        let r = compare_argument_diversity(&same, &lib, &distinct, &lib, &e, 0.6, boot()).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].entropy_a.mean, 0.0);
        assert!((r.rows[0].entropy_b.mean - 20f64.log2()).abs() < 1e-9);
        let few: Vec<GeneratedExample> = (0..19).map(|i| ex(i, "x")).collect();
        assert!(compare_argument_diversity(&few, &lib, &distinct, &lib, &e, 0.6, boot()).unwrap().rows.is_empty());
    }
}
