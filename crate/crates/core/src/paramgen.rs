//! Ground-truth argument generation.
//!
//! NUMERICAL and STRING arguments come from a greedy step: the model proposes
//! a pool of candidates, a few are sampled, and the one that most increases the
//! cluster entropy of the parameter group's committed values (augmented with
//! the unsampled candidates) wins. Values are staged per example and only
//! reach the group trackers when the whole example is accepted.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use tracing::debug;

use crate::config::RunConfig;
use crate::error::{Error, ProviderError, Result};
use crate::metrics::cluster::value_cluster_entropy;
use crate::metrics::stats::subsample_indices;
use crate::model::{FunctionLibrary, FunctionSchema, JudgeRecord, MISSING_SENTINEL, ParamCategory, ParameterSpec};
use crate::preprocess::{ParamRef, ParameterGroup};
use crate::providers::{ChatProvider, Embedder, Signature, ask_yes_no, call_signature, catalog, fields};

/// Most recent committed values shown to the model as `existing_values`.
pub const EXISTING_VALUES_SHOWN: usize = 100;

/// Append-only committed values per parameter group.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trackers {
    values: Vec<Vec<String>>,
}

impl Trackers {
    pub fn new(groups: usize) -> Self {
        Trackers {
            values: vec![Vec::new(); groups],
        }
    }

    pub fn get(&self, group: usize) -> &[String] {
        self.values.get(group).map_or(&[], Vec::as_slice)
    }

    pub fn commit(&mut self, staged: &[(usize, String)]) {
        for (g, v) in staged {
            if *g >= self.values.len() {
                self.values.resize(g + 1, Vec::new());
            }
            self.values[*g].push(v.clone());
        }
    }

    pub fn total(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }
}

/// Text form of an argument value, as stored in trackers.
pub fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn is_integer_type(declared: &str) -> bool {
    let d = declared.to_ascii_lowercase();
    d.contains("int") || d == "long"
}

/// Reads a numeric value, keeping integers integral for integer parameters.
pub fn numeric_value(v: &Value, declared: &str) -> Option<Value> {
    let x = match v {
        Value::Number(n) => n.as_f64()?,
        Value::String(s) => s.trim().parse::<f64>().ok()?,
        _ => return None,
    };
    if !x.is_finite() {
        return None;
    }
    if is_integer_type(declared) && x.fract() == 0.0 && x.abs() < 9.0e15 {
        return Some(Value::from(x as i64));
    }
    serde_json::Number::from_f64(x).map(Value::Number)
}

/// Parses a model-written value: JSON if it parses, else the trimmed text.
fn loose_json(text: &str) -> Value {
    let t = text.trim();
    serde_json::from_str(t).unwrap_or_else(|_| Value::String(t.trim_matches('\'').to_string()))
}

fn json_text<T: Serialize + ?Sized>(v: &T) -> String {
    serde_json::to_string(v).expect("JSON values serialize")
}

/// Values staged by one example plus the verdicts collected on the way.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Draft {
    pub staged: Vec<(usize, String)>,
    pub verdicts: Vec<JudgeRecord>,
}

/// Outcome of the greedy selection step, kept for inspection and tests.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub chosen: usize,
    /// Indices into the candidate list that were offered, in draw order.
    pub offered: Vec<usize>,
    /// Entropy of the augmented view with each offered candidate added.
    pub entropies: Vec<f64>,
}

/// Greedy choice among `select` randomly offered candidates. The hidden
/// candidates join the committed values to form the augmented view; the
/// offered candidate maximizing that view's cluster entropy wins, first on ties.
pub fn select_diverse_value(
    candidates: &[String],
    committed: &[String],
    category: ParamCategory,
    embedder: &dyn Embedder,
    select: usize,
    rng: &mut impl Rng,
) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidates to select from"));
    }
    let offered = subsample_indices(rng, candidates.len(), select.min(candidates.len()));
    let mut base: Vec<String> = committed.to_vec();
    base.extend(
        (0..candidates.len())
            .filter(|i| !offered.contains(i))
            .map(|i| candidates[i].clone()),
    );
    let entropies = offered
        .par_iter()
        .map(|&i| {
            let mut view = base.clone();
            view.push(candidates[i].clone());
            value_cluster_entropy(&view, category, embedder)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (k, &h) in entropies.iter().enumerate() {
        if h > entropies[best] {
            best = k;
        }
    }
    Ok(Selection {
        chosen: offered[best],
        offered,
        entropies,
    })
}

/// Everything argument generation reads. Trackers are a snapshot.
pub struct ParamEnv<'a> {
    pub library: &'a FunctionLibrary,
    pub groups: &'a [ParameterGroup],
    pub index: &'a HashMap<ParamRef, usize>,
    pub trackers: &'a Trackers,
    pub llm: &'a dyn ChatProvider,
    pub embedder: &'a dyn Embedder,
    pub cfg: &'a RunConfig,
}

impl<'a> ParamEnv<'a> {
    pub fn group_of(&self, function: &str, parameter: &str) -> Option<usize> {
        self.index.get(&ParamRef::new(function, parameter)).copied()
    }

    /// Committed values of a group plus this example's staged ones.
    fn view(&self, group: Option<usize>, draft: &Draft, local: &[(usize, String)]) -> Vec<String> {
        let Some(g) = group else {
            return Vec::new();
        };
        let mut v = self.trackers.get(g).to_vec();
        v.extend(draft.staged.iter().chain(local).filter(|(h, _)| *h == g).map(|(_, s)| s.clone()));
        v
    }

    fn existing_json(&self, view: &[String]) -> String {
        let start = view.len().saturating_sub(EXISTING_VALUES_SHOWN);
        json_text(&view[start..])
    }

    fn group_context(&self, function: &str, parameter: &str) -> String {
        let Some(g) = self.group_of(function, parameter) else {
            return "None".into();
        };
        let lines: Vec<String> = self.groups[g]
            .members
            .iter()
            .filter(|m| !(m.function == function && m.parameter == parameter))
            .filter_map(|m| {
                let p = self.library.get(&m.function)?.parameter(&m.parameter)?;
                Some(format!("{}.{}: {}", m.function, m.parameter, p.description))
            })
            .collect();
        if lines.is_empty() { "None".into() } else { lines.join("\n") }
    }

    fn base_inputs(&self, f: &FunctionSchema, p: &ParameterSpec, args: &Map<String, Value>) -> Vec<(&'static str, String)> {
        vec![
            ("parameter_name", p.name.clone()),
            ("parameter_description", p.description.clone()),
            ("parameter_type", p.declared_type.clone()),
            ("function_name", f.name.clone()),
            ("function_description", f.description.clone()),
            ("other_parameter_values", json_text(args)),
        ]
    }

    fn retries(&self) -> usize {
        self.cfg.retry_limit
    }

    /// Calls `sig` and parses the reply with `parse`, re-asking when the
    /// content (rather than the markers) is malformed.
    fn call_parsed<T>(
        &self,
        sig: &Signature,
        inputs: &indexmap::IndexMap<String, String>,
        parse: impl Fn(&indexmap::IndexMap<String, String>) -> std::result::Result<T, ProviderError>,
    ) -> Result<T> {
        let mut last = None;
        for _ in 0..=self.retries() {
            let out = call_signature(self.llm, sig, inputs, self.retries())?;
            match parse(&out) {
                Ok(v) => return Ok(v),
                Err(e) => {
                    debug!(signature = %sig.name, error = %e, "unusable reply content");
                    last = Some(e);
                }
            }
        }
        Err(Error::Provider(last.expect("at least one attempt")))
    }

    /// One raw candidate list from the model.
    fn candidate_call(
        &self,
        f: &FunctionSchema,
        p: &ParameterSpec,
        args: &Map<String, Value>,
        view: &[String],
        n: usize,
        failures: &str,
    ) -> Result<Vec<String>> {
        let sig = match p.category {
            ParamCategory::Numerical => &*catalog::GENERATE_MULTIPLE_NUMERICAL_PARAMETERS,
            ParamCategory::String => &*catalog::GENERATE_MULTIPLE_STRING_PARAMETERS,
            other => return Err(Error::invalid(format!("no candidate pool for {other} parameters"))),
        };
        let mut inputs = self.base_inputs(f, p, args);
        inputs.push(("existing_values", self.existing_json(view)));
        inputs.push(("parameter_group_context", self.group_context(&f.name, &p.name)));
        inputs.push(("num_candidates", n.to_string()));
        inputs.push(("previous_failures", failures_text(failures)));
        let numeric = p.category == ParamCategory::Numerical;
        self.call_parsed(sig, &fields(inputs), |out| {
            let list: Vec<Value> = serde_json::from_str(out["generated_values"].trim())
                .map_err(|e| ProviderError::Malformed(format!("generated_values is not a JSON list: {e}")))?;
            list.iter()
                .map(|v| {
                    if numeric {
                        numeric_value(v, &p.declared_type)
                            .map(|n| value_text(&n))
                            .ok_or_else(|| ProviderError::Malformed(format!("non-numeric candidate {v}")))
                    } else {
                        Ok(value_text(v).trim().to_string())
                    }
                })
                .collect()
        })
    }

    /// A de-duplicated pool of up to `candidate_pool_size` values. Short pools
    /// get one top-up call; fewer than `candidate_select` distinct values fail.
    pub fn generate_value_candidates(
        &self,
        f: &FunctionSchema,
        p: &ParameterSpec,
        args: &Map<String, Value>,
        view: &[String],
        failures: &str,
    ) -> Result<Vec<String>> {
        let want = self.cfg.candidate_pool_size;
        let mut pool: Vec<String> = Vec::new();
        let add = |pool: &mut Vec<String>, vals: Vec<String>| {
            for v in vals {
                if !v.is_empty() && !pool.contains(&v) && pool.len() < want {
                    pool.push(v);
                }
            }
        };
        add(&mut pool, self.candidate_call(f, p, args, view, want, failures)?);
        if pool.len() < want {
            let mut seen = view.to_vec();
            seen.extend(pool.iter().cloned());
            let more = self.candidate_call(f, p, args, &seen, want - pool.len(), failures)?;
            add(&mut pool, more);
        }
        if pool.len() < self.cfg.candidate_select {
            return Err(Error::Generation(format!(
                "only {} distinct candidates for {}.{}",
                pool.len(),
                f.name,
                p.name
            )));
        }
        Ok(pool)
    }

    fn other_value(&self, f: &FunctionSchema, p: &ParameterSpec, args: &Map<String, Value>, view: &[String], failures: &str) -> Result<Value> {
        let mut inputs = self.base_inputs(f, p, args);
        inputs.push(("existing_values", self.existing_json(view)));
        inputs.push(("parameter_group_context", self.group_context(&f.name, &p.name)));
        inputs.push(("previous_failures", failures_text(failures)));
        self.call_parsed(&catalog::GENERATE_OTHER_PARAMETER, &fields(inputs), |out| {
            Ok(loose_json(&out["generated_value"]))
        })
    }

    fn enum_value(p: &ParameterSpec, rng: &mut impl Rng) -> Value {
        let lit = &p.enum_values[rng.random_range(0..p.enum_values.len())];
        if matches!(classify_base(&p.declared_type), ParamCategory::Numerical) {
            if let Some(n) = numeric_value(&Value::String(lit.clone()), &p.declared_type) {
                return n;
            }
        }
        Value::String(lit.clone())
    }

    /// Which parameters get a value: all required ones, plus each optional
    /// one with the configured probability (one draw per optional parameter).
    pub fn plan_parameters<'f>(&self, f: &'f FunctionSchema, rng: &mut impl Rng) -> Vec<&'f ParameterSpec> {
        let p = self.cfg.optional_param_probability;
        f.parameters
            .iter()
            .filter(|spec| spec.required || rng.random_bool(p))
            .collect()
    }

    fn validate_full(&self, f: &FunctionSchema, args: &Map<String, Value>) -> Result<JudgeRecord> {
        let sig = &*catalog::PARAMETER_SET_VALIDATOR;
        let inputs = fields([
            ("api_name", f.name.clone()),
            ("api_description", f.description.clone()),
            ("full_parameter_schema", json_text(&f.parameters_json())),
            ("selected_parameters", json_text(args)),
        ]);
        let (valid, reasoning) = ask_yes_no(self.llm, sig, &inputs, "is_valid", self.retries())?;
        Ok(JudgeRecord { stage: sig.name.clone(), valid, reasoning })
    }

    fn validate_partial(&self, f: &FunctionSchema, args: &Map<String, Value>) -> Result<JudgeRecord> {
        let sig = &*catalog::PARTIAL_PARAMETER_SET_VALIDATOR;
        let inputs = fields([
            ("api_name", f.name.clone()),
            ("api_description", f.description.clone()),
            ("full_parameter_schema", json_text(&f.parameters_json())),
            ("provided_parameters", json_text(&without_sentinels(args))),
        ]);
        let (valid, reasoning) = ask_yes_no(self.llm, sig, &inputs, "is_valid", self.retries())?;
        Ok(JudgeRecord { stage: sig.name.clone(), valid, reasoning })
    }

    /// Greedy generation for the planned parameters of one function, retried
    /// as a whole on validator rejection. `missing` parameters get the sentinel.
    fn diverse_set(
        &self,
        f: &FunctionSchema,
        plan: &[&ParameterSpec],
        missing: &[String],
        draft: &mut Draft,
        rng: &mut impl Rng,
    ) -> Result<Map<String, Value>> {
        let mut failures = String::new();
        for attempt in 0..self.retries().max(1) {
            let mut args = Map::new();
            let mut local: Vec<(usize, String)> = Vec::new();
            for p in &f.parameters {
                if missing.contains(&p.name) {
                    args.insert(p.name.clone(), Value::String(MISSING_SENTINEL.into()));
                    continue;
                }
                if !plan.iter().any(|q| q.name == p.name) {
                    continue;
                }
                let group = self.group_of(&f.name, &p.name);
                let view = self.view(group, draft, &local);
                let value = match p.category {
                    ParamCategory::Enum => Self::enum_value(p, rng),
                    ParamCategory::Other => self.other_value(f, p, &args, &view, &failures)?,
                    cat => {
                        let cands = self.generate_value_candidates(f, p, &args, &view, &failures)?;
                        let sel = select_diverse_value(&cands, &view, cat, self.embedder, self.cfg.candidate_select, rng)?;
                        let text = &cands[sel.chosen];
                        if cat == ParamCategory::Numerical {
                            numeric_value(&Value::String(text.clone()), &p.declared_type)
                                .ok_or_else(|| Error::Generation(format!("non-numeric candidate {text}")))?
                        } else {
                            Value::String(text.clone())
                        }
                    }
                };
                if let Some(g) = group {
                    local.push((g, value_text(&value)));
                }
                args.insert(p.name.clone(), value);
            }
            let verdict = if missing.is_empty() {
                self.validate_full(f, &args)?
            } else {
                self.validate_partial(f, &args)?
            };
            let ok = verdict.valid;
            failures = verdict.reasoning.clone();
            draft.verdicts.push(verdict);
            if ok {
                draft.staged.extend(local);
                return Ok(args);
            }
            debug!(function = %f.name, attempt, "parameter set rejected");
        }
        Err(Error::Generation(format!(
            "parameter set for {} rejected {} times",
            f.name,
            self.retries().max(1)
        )))
    }

    pub fn generate_single_params(&self, f: &FunctionSchema, draft: &mut Draft, rng: &mut impl Rng) -> Result<Map<String, Value>> {
        let plan = self.plan_parameters(f, rng);
        self.diverse_set(f, &plan, &[], draft, rng)
    }

    /// Omits `k ~ Binomial(n_required, p)` required parameters (at least one),
    /// chosen uniformly, and generates the rest. Returns the arguments and the
    /// omitted names in schema order.
    pub fn generate_missing_params(
        &self,
        f: &FunctionSchema,
        draft: &mut Draft,
        rng: &mut impl Rng,
    ) -> Result<(Map<String, Value>, Vec<String>)> {
        let required: Vec<&ParameterSpec> = f.required_parameters().collect();
        if required.is_empty() {
            return Err(Error::invalid(format!("{} has no required parameters to omit", f.name)));
        }
        let k = omission_count(required.len(), self.cfg.missing_param_probability, rng)?;
        let mut picked = subsample_indices(rng, required.len(), k);
        picked.sort_unstable();
        let missing: Vec<String> = picked.iter().map(|&i| required[i].name.clone()).collect();
        let plan: Vec<&ParameterSpec> = self
            .plan_parameters(f, rng)
            .into_iter()
            .filter(|p| !missing.contains(&p.name))
            .collect();
        let args = self.diverse_set(f, &plan, &missing, draft, rng)?;
        Ok((args, missing))
    }

    /// Generates the non-diverse functions of a PARALLEL set with the cohesive
    /// signatures, each seeing the arguments generated so far.
    fn cohesive_set(
        &self,
        f: &FunctionSchema,
        context: &[(String, Map<String, Value>)],
        draft: &mut Draft,
        rng: &mut impl Rng,
    ) -> Result<Map<String, Value>> {
        let mut failures = String::new();
        for _ in 0..self.retries().max(1) {
            let plan = self.plan_parameters(f, rng);
            let mut args = Map::new();
            let mut local = Vec::new();
            for p in plan {
                let group = self.group_of(&f.name, &p.name);
                let view = self.view(group, draft, &local);
                let value = if p.category == ParamCategory::Enum {
                    Self::enum_value(p, rng)
                } else {
                    let sig = match p.category {
                        ParamCategory::Numerical => &*catalog::GENERATE_COHESIVE_NUMERICAL_PARAMETER,
                        ParamCategory::String => &*catalog::GENERATE_COHESIVE_STRING_PARAMETER,
                        _ => &*catalog::GENERATE_COHESIVE_OTHER_PARAMETER,
                    };
                    let mut inputs = self.base_inputs(f, p, &args);
                    inputs.push(("parallel_context_parameters", context_json(context)));
                    inputs.push(("existing_values", self.existing_json(&view)));
                    inputs.push(("parameter_group_context", self.group_context(&f.name, &p.name)));
                    inputs.push(("previous_failures", failures_text(&failures)));
                    self.call_parsed(sig, &fields(inputs), |out| parse_single(&out["generated_value"], p))?
                };
                if let Some(g) = group {
                    local.push((g, value_text(&value)));
                }
                args.insert(p.name.clone(), value);
            }
            let verdict = self.validate_full(f, &args)?;
            let ok = verdict.valid;
            failures = verdict.reasoning.clone();
            draft.verdicts.push(verdict);
            if ok {
                draft.staged.extend(local);
                return Ok(args);
            }
        }
        Err(Error::Generation(format!("cohesive parameters for {} rejected", f.name)))
    }

    /// PARALLEL arguments. `diverse_functions_per_example` functions, drawn
    /// uniformly, get greedy generation first; the rest follow cohesively.
    /// Nothing is staged unless every function validates.
    pub fn generate_parallel_params(
        &self,
        functions: &[&FunctionSchema],
        draft: &mut Draft,
        rng: &mut impl Rng,
    ) -> Result<(Vec<Map<String, Value>>, Vec<String>)> {
        let n = functions.len();
        let d = self.cfg.diverse_functions_per_example.min(n).max(1);
        let mut diverse = subsample_indices(rng, n, d);
        diverse.sort_unstable();
        let mut local = Draft {
            staged: draft.staged.clone(),
            verdicts: Vec::new(),
        };
        let mut maps: Vec<Option<Map<String, Value>>> = vec![None; n];
        let mut context: Vec<(String, Map<String, Value>)> = Vec::new();
        for &i in &diverse {
            let args = self.generate_single_params(functions[i], &mut local, rng)?;
            context.push((functions[i].name.clone(), args.clone()));
            maps[i] = Some(args);
        }
        for i in 0..n {
            if maps[i].is_none() {
                let args = self.cohesive_set(functions[i], &context, &mut local, rng)?;
                context.push((functions[i].name.clone(), args.clone()));
                maps[i] = Some(args);
            }
        }
        draft.staged = local.staged;
        draft.verdicts.extend(local.verdicts);
        let names = diverse.iter().map(|&i| functions[i].name.clone()).collect();
        Ok((maps.into_iter().map(Option::unwrap).collect(), names))
    }

    fn return_value(
        &self,
        f: &FunctionSchema,
        next: &FunctionSchema,
        next_args: &Map<String, Value>,
        failures: &str,
    ) -> Result<Value> {
        let schema = f.return_schema.as_ref().map(|r| r.to_json_schema()).unwrap_or(Value::Object(Map::new()));
        let inputs = fields([
            ("api_name", f.name.clone()),
            ("api_description", f.description.clone()),
            ("return_type_schema", json_text(&schema)),
            ("next_api_name", next.name.clone()),
            ("next_api_description", next.description.clone()),
            ("next_api_parameters_schema", json_text(&next.parameters_json())),
            ("next_api_parameters_values", json_text(next_args)),
            ("previous_failures", failures_text(failures)),
        ]);
        self.call_parsed(&catalog::GENERATE_RETURN_VALUE, &inputs, |out| Ok(loose_json(&out["return_value"])))
    }

    fn validate_return_value(
        &self,
        f: &FunctionSchema,
        value: &Value,
        args: &Map<String, Value>,
        next: &FunctionSchema,
        next_args: &Map<String, Value>,
    ) -> Result<JudgeRecord> {
        let sig = &*catalog::VALIDATE_RETURN_VALUE;
        let schema = f.return_schema.as_ref().map(|r| r.to_json_schema()).unwrap_or(Value::Object(Map::new()));
        let inputs = fields([
            ("api_name", f.name.clone()),
            ("api_description", f.description.clone()),
            ("return_type_schema", json_text(&schema)),
            ("return_value", json_text(value)),
            ("api_parameters", json_text(args)),
            ("next_api_name", next.name.clone()),
            ("next_api_description", next.description.clone()),
            ("next_api_parameters", json_text(next_args)),
        ]);
        let (valid, reasoning) = ask_yes_no(self.llm, sig, &inputs, "is_valid", self.retries())?;
        Ok(JudgeRecord { stage: sig.name.clone(), valid, reasoning })
    }

    pub fn validate_sequential_chain(
        &self,
        functions: &[&FunctionSchema],
        args: &[Map<String, Value>],
        returns: &[Value],
    ) -> Result<JudgeRecord> {
        let sig = &*catalog::VALIDATE_SEQUENTIAL_CHAIN;
        let schemas: Vec<Value> = functions.iter().map(|f| f.to_json()).collect();
        let inputs = fields([
            ("api_schemas", json_text(&schemas)),
            ("parameters_list", json_text(&args)),
            ("return_values_list", json_text(&returns)),
        ]);
        let (valid, reasoning) = ask_yes_no(self.llm, sig, &inputs, "is_valid", self.retries())?;
        Ok(JudgeRecord { stage: sig.name.clone(), valid, reasoning })
    }

    /// Arguments for a non-final chain member, consistent with its own return
    /// value and with every later call.
    fn sequential_set(
        &self,
        f: &FunctionSchema,
        next: &FunctionSchema,
        later: &[Map<String, Value>],
        draft: &mut Draft,
        rng: &mut impl Rng,
    ) -> Result<(Map<String, Value>, Value)> {
        let next_args = &later[0];
        let mut failures = String::new();
        for _ in 0..self.retries().max(1) {
            let ret = self.return_value(f, next, next_args, &failures)?;
            let plan = self.plan_parameters(f, rng);
            let mut args = Map::new();
            let mut local = Vec::new();
            for p in plan {
                let group = self.group_of(&f.name, &p.name);
                let view = self.view(group, draft, &local);
                let value = if p.category == ParamCategory::Enum {
                    Self::enum_value(p, rng)
                } else {
                    let sig = match p.category {
                        ParamCategory::Numerical => &*catalog::GENERATE_SEQUENTIAL_COHESIVE_NUMERICAL_PARAMETER,
                        ParamCategory::String => &*catalog::GENERATE_SEQUENTIAL_COHESIVE_STRING_PARAMETER,
                        _ => &*catalog::GENERATE_SEQUENTIAL_COHESIVE_OTHER_PARAMETER,
                    };
                    let mut inputs = self.base_inputs(f, p, &args);
                    inputs.push(("return_value", json_text(&ret)));
                    inputs.push(("next_api_parameters", json_text(next_args)));
                    inputs.push(("later_api_parameters", json_text(&later)));
                    inputs.push(("existing_values", self.existing_json(&view)));
                    inputs.push(("parameter_group_context", self.group_context(&f.name, &p.name)));
                    inputs.push(("previous_failures", failures_text(&failures)));
                    self.call_parsed(sig, &fields(inputs), |out| parse_single(&out["generated_value"], p))?
                };
                if let Some(g) = group {
                    local.push((g, value_text(&value)));
                }
                args.insert(p.name.clone(), value);
            }
            let set = self.validate_full(f, &args)?;
            let set_ok = set.valid;
            failures = set.reasoning.clone();
            draft.verdicts.push(set);
            if set_ok {
                let rv = self.validate_return_value(f, &ret, &args, next, next_args)?;
                let rv_ok = rv.valid;
                failures = rv.reasoning.clone();
                draft.verdicts.push(rv);
                if rv_ok {
                    draft.staged.extend(local);
                    return Ok((args, ret));
                }
            }
        }
        Err(Error::Generation(format!("chain member {} rejected", f.name)))
    }

    /// SEQUENTIAL arguments, built backwards: the last function gets greedy
    /// generation, each earlier one a return value and cohesive arguments.
    /// The whole chain is then validated; a rejected chain is regenerated.
    pub fn generate_sequential_chain(
        &self,
        functions: &[&FunctionSchema],
        draft: &mut Draft,
        rng: &mut impl Rng,
    ) -> Result<(Vec<Map<String, Value>>, Vec<Value>)> {
        let n = functions.len();
        if n < 2 {
            return Err(Error::invalid("a sequential chain needs at least two functions"));
        }
        for attempt in 0..self.retries().max(1) {
            let mut local = Draft {
                staged: draft.staged.clone(),
                verdicts: Vec::new(),
            };
            let mut args: Vec<Map<String, Value>> = vec![Map::new(); n];
            let mut returns: Vec<Value> = vec![Value::Null; n - 1];
            args[n - 1] = self.generate_single_params(functions[n - 1], &mut local, rng)?;
            for i in (0..n - 1).rev() {
                let (a, r) = self.sequential_set(functions[i], functions[i + 1], &args[i + 1..], &mut local, rng)?;
                args[i] = a;
                returns[i] = r;
            }
            let chain = self.validate_sequential_chain(functions, &args, &returns)?;
            let ok = chain.valid;
            local.verdicts.push(chain);
            draft.verdicts.append(&mut local.verdicts);
            if ok {
                draft.staged = local.staged;
                return Ok((args, returns));
            }
            debug!(attempt, "sequential chain rejected");
        }
        Err(Error::Generation("sequential chain rejected".into()))
    }
}

fn classify_base(declared: &str) -> ParamCategory {
    crate::model::classify_parameter_type(declared, &[])
}

fn failures_text(f: &str) -> String {
    if f.trim().is_empty() { "None".into() } else { f.to_string() }
}

fn context_json(context: &[(String, Map<String, Value>)]) -> String {
    let m: Map<String, Value> = context.iter().map(|(k, v)| (k.clone(), Value::Object(v.clone()))).collect();
    json_text(&m)
}

fn parse_single(text: &str, p: &ParameterSpec) -> std::result::Result<Value, ProviderError> {
    let v = loose_json(text);
    match p.category {
        ParamCategory::Numerical => numeric_value(&v, &p.declared_type)
            .ok_or_else(|| ProviderError::Malformed(format!("expected a number for {}, got {text:?}", p.name))),
        ParamCategory::String => Ok(Value::String(value_text(&v))),
        _ => Ok(v),
    }
}

pub fn without_sentinels(args: &Map<String, Value>) -> Map<String, Value> {
    args.iter()
        .filter(|(_, v)| v.as_str() != Some(MISSING_SENTINEL))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect()
}

/// Number of required parameters to omit: Binomial(n, p) raised to at least 1.
pub fn omission_count(n_required: usize, p: f64, rng: &mut impl Rng) -> Result<usize> {
    let b = Binomial::new(n_required as u64, p).map_err(|e| Error::Config(format!("missing_param_probability: {e}")))?;
    Ok((b.sample(rng) as usize).max(1))
}
