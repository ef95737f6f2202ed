//! The generation loop: sample targets, generate arguments, write a query,
//! pick distractors and commit. Each attempt draws its own seed from a master
//! stream, so a run resumed from a checkpoint continues exactly where the
//! uninterrupted run would have been.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value, json};
use tracing::{info, warn};

use crate::config::RunConfig;
use crate::distractors::select_distractors;
use crate::error::{Error, Result};
use crate::model::{
    ExampleMetadata, ExecutionType, FunctionSchema, GeneratedExample, Invocation, JudgeRecord, NoneKind, example_to_line,
    read_dataset_prefix,
};
use crate::paramgen::{Draft, ParamEnv, Trackers};
use crate::preprocess::{ParamRef, PreprocessArtifact, group_index};
use crate::providers::{ChatProvider, Embedder};
use crate::querygen::{PatternMonitor, QueryEnv, QuerySkeleton, is_fatal};
use crate::sampler::{sample_execution_type, sample_targets};

/// Files written by a generation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPaths {
    pub dataset: PathBuf,
    pub checkpoint: PathBuf,
    pub log: PathBuf,
}

impl RunPaths {
    /// `out`, `out.checkpoint.json` and `out.log.jsonl`.
    pub fn for_output(out: impl AsRef<Path>) -> Self {
        let out = out.as_ref();
        let with = |suffix: &str| {
            let mut s = out.as_os_str().to_owned();
            s.push(suffix);
            PathBuf::from(s)
        };
        RunPaths {
            dataset: out.to_path_buf(),
            checkpoint: with(".checkpoint.json"),
            log: with(".log.jsonl"),
        }
    }
}

/// State needed to continue a run as if it had never stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub last_accepted_id: Option<String>,
    pub accepted: usize,
    pub attempts: u64,
    pub abandoned: u64,
    pub rng: ChaCha8Rng,
    pub trackers: Trackers,
    pub monitor: PatternMonitor,
}

impl Checkpoint {
    pub fn fresh(seed: u64, groups: usize) -> Self {
        Checkpoint {
            last_accepted_id: None,
            accepted: 0,
            attempts: 0,
            abandoned: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            trackers: Trackers::new(groups),
            monitor: PatternMonitor::default(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Write-then-rename so a crash never leaves a torn checkpoint.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        fs::write(&tmp, serde_json::to_string(self)? + "\n").map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Attempt {
    Accepted {
        example: GeneratedExample,
        staged: Vec<(usize, String)>,
    },
    Abandoned {
        execution_type: ExecutionType,
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RunSummary {
    pub accepted: usize,
    pub attempts: u64,
    pub abandoned: u64,
    pub resumed_at: Option<usize>,
}

pub struct Generator<'a> {
    pub artifact: &'a PreprocessArtifact,
    pub llm: &'a dyn ChatProvider,
    pub embedder: &'a dyn Embedder,
    pub cfg: &'a RunConfig,
    index: HashMap<ParamRef, usize>,
}

struct RunLog {
    out: BufWriter<File>,
}

impl RunLog {
    fn open(path: &Path, append: bool) -> Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .append(append)
            .write(true)
            .truncate(!append)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(RunLog { out: BufWriter::new(file) })
    }

    fn event(&mut self, value: Value) {
        if let Err(e) = writeln!(self.out, "{value}").and_then(|_| self.out.flush()) {
            warn!(error = %e, "run log write failed");
        }
    }
}

fn abandoned(exec: ExecutionType, e: impl std::fmt::Display) -> Attempt {
    Attempt::Abandoned {
        execution_type: exec,
        reason: e.to_string(),
    }
}

impl<'a> Generator<'a> {
    pub fn new(artifact: &'a PreprocessArtifact, llm: &'a dyn ChatProvider, embedder: &'a dyn Embedder, cfg: &'a RunConfig) -> Self {
        Generator {
            artifact,
            llm,
            embedder,
            cfg,
            index: group_index(&artifact.groups),
        }
    }

    /// One attempt from a fixed seed. Returns `Err` only for failures that
    /// should stop the run (provider outages, broken configuration).
    pub fn attempt(
        &self,
        seed: u64,
        trackers: &Trackers,
        dataset: &[String],
        guidance: Option<&str>,
    ) -> Result<Attempt> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let exec = sample_execution_type(&self.cfg.mixture, &mut rng)?;
        match self.build(exec, &mut rng, trackers, dataset, guidance) {
            Ok(a) => Ok(a),
            Err(e) if is_fatal(&e) || matches!(e, Error::Config(_) | Error::Io { .. }) => Err(e),
            Err(e) => Ok(abandoned(exec, e)),
        }
    }

    fn build(
        &self,
        exec: ExecutionType,
        rng: &mut ChaCha8Rng,
        trackers: &Trackers,
        dataset: &[String],
        guidance: Option<&str>,
    ) -> Result<Attempt> {
        let lib = &self.artifact.library;
        let draw = sample_targets(exec, self.artifact, self.embedder, self.llm, self.cfg, rng)?;
        let functions: Vec<&FunctionSchema> = draw
            .functions
            .iter()
            .map(|n| lib.get(n).ok_or_else(|| Error::invalid(format!("sampled unknown function {n}"))))
            .collect::<Result<_>>()?;
        let env = ParamEnv {
            library: lib,
            groups: &self.artifact.groups,
            index: &self.index,
            trackers,
            llm: self.llm,
            embedder: self.embedder,
            cfg: self.cfg,
        };
        let mut draft = Draft {
            staged: Vec::new(),
            verdicts: draw.verdicts,
        };
        let mut arguments: Vec<Map<String, Value>> = Vec::new();
        let mut returns: Vec<Value> = Vec::new();
        let mut missing: Vec<String> = Vec::new();
        let mut diverse_function = None;
        let mut none_kind = None;
        match exec {
            ExecutionType::None => {
                none_kind = Some(if rng.random_bool(self.cfg.none_vague_fraction) {
                    NoneKind::Vague
                } else {
                    NoneKind::NoApi
                });
            }
            ExecutionType::Single => {
                arguments.push(env.generate_single_params(functions[0], &mut draft, rng)?);
                diverse_function = Some(functions[0].name.clone());
            }
            ExecutionType::MissingParams => {
                let (args, m) = env.generate_missing_params(functions[0], &mut draft, rng)?;
                arguments.push(args);
                missing = m;
                diverse_function = Some(functions[0].name.clone());
            }
            ExecutionType::Parallel => {
                let (args, diverse) = env.generate_parallel_params(&functions, &mut draft, rng)?;
                arguments = args;
                diverse_function = diverse.into_iter().next();
            }
            ExecutionType::Sequential => {
                let (args, rets) = env.generate_sequential_chain(&functions, &mut draft, rng)?;
                arguments = args;
                returns = rets;
                diverse_function = functions.last().map(|f| f.name.clone());
            }
        }

        let skeleton = QuerySkeleton {
            execution_type: exec,
            functions: functions.iter().map(|f| (*f).clone()).collect(),
            arguments: arguments.clone(),
            return_values: returns.clone(),
            missing: missing.clone(),
            none_kind,
        };
        let qenv = QueryEnv {
            llm: self.llm,
            embedder: self.embedder,
            cfg: self.cfg,
            guidance,
        };
        let Some(outcome) = qenv.generate_query(&skeleton, dataset, rng)? else {
            return Ok(abandoned(exec, "no candidate query passed the judge"));
        };
        let chosen_verdict: Vec<JudgeRecord> = outcome
            .attempts
            .iter()
            .zip(&outcome.verdicts)
            .filter(|(a, _)| a.query == outcome.query)
            .map(|(_, v)| v.clone())
            .collect();
        draft.verdicts.extend(chosen_verdict);

        let mut invocations: Vec<Invocation> = draw
            .functions
            .iter()
            .zip(arguments)
            .enumerate()
            .map(|(i, (name, args))| Invocation {
                function_name: name.clone(),
                arguments: args,
                order_index: if exec == ExecutionType::Sequential { i } else { 0 },
            })
            .collect();
        let picked = select_distractors(
            &outcome.query,
            exec,
            &draw.functions,
            &invocations,
            &returns,
            lib,
            self.embedder,
            self.llm,
            self.cfg,
            rng,
        )?;
        draft.verdicts.extend(picked.verdicts);
        let mut final_exec = exec;
        if picked.targets.len() < draw.functions.len() {
            if exec == ExecutionType::Sequential && picked.targets.len() > 1 {
                return Ok(abandoned(exec, "a shorter chain also answers the query"));
            }
            invocations.retain(|inv| picked.targets.contains(&inv.function_name));
            for inv in &mut invocations {
                inv.order_index = 0;
            }
            returns.clear();
            final_exec = picked.execution_type;
        }

        let example = GeneratedExample {
            id: String::new(),
            execution_type: final_exec,
            query: outcome.query,
            target_invocations: invocations,
            return_values: returns,
            candidate_functions: picked.candidate_functions,
            metadata: ExampleMetadata {
                generation_round: 0,
                commit_index: 0,
                rng_seed: 0,
                judge_verdicts: draft.verdicts,
                diversity_rank: Some(outcome.rank),
                missing_parameters: missing,
                diverse_function,
                none_kind,
                original_execution_type: (final_exec != exec).then_some(exec),
            },
        };
        Ok(Attempt::Accepted {
            example,
            staged: draft.staged,
        })
    }

    /// Generates until `n` examples are accepted. With `resume`, continues
    /// from the checkpoint next to the output if there is one.
    pub fn run(&self, n: usize, paths: &RunPaths, resume: bool) -> Result<RunSummary> {
        let resuming = resume && paths.checkpoint.exists();
        let (mut state, mut examples) = if resuming {
            let cp = Checkpoint::load(&paths.checkpoint)?;
            let mut ex = if paths.dataset.exists() { read_dataset_prefix(&paths.dataset, cp.accepted)? } else { Vec::new() };
            if ex.len() < cp.accepted {
                return Err(Error::invalid(format!(
                    "checkpoint expects {} examples but {} has {}",
                    cp.accepted,
                    paths.dataset.display(),
                    ex.len()
                )));
            }
            ex.truncate(cp.accepted);
            (cp, ex)
        } else {
            (Checkpoint::fresh(self.cfg.rng_seed, self.artifact.groups.len()), Vec::new())
        };
        let resumed_at = resuming.then_some(state.accepted);

        // Rewrite the accepted prefix so lines written after the checkpoint disappear.
        let mut data = BufWriter::new(File::create(&paths.dataset).map_err(|e| Error::io(&paths.dataset, e))?);
        for ex in &examples {
            writeln!(data, "{}", example_to_line(ex)?).map_err(|e| Error::io(&paths.dataset, e))?;
        }
        data.flush().map_err(|e| Error::io(&paths.dataset, e))?;
        let mut log = RunLog::open(&paths.log, resuming)?;
        log.event(json!({"event": if resuming { "resume" } else { "start" }, "accepted": state.accepted, "target": n}));

        let mut queries: Vec<String> = examples.iter().map(|e| e.query.clone()).collect();
        let mut consecutive = 0usize;
        while state.accepted < n {
            let seed = state.rng.next_u64();
            state.attempts += 1;
            let attempt = match self.attempt(seed, &state.trackers, &queries, state.monitor.guidance.as_deref()) {
                Ok(a) => a,
                Err(e) => {
                    log.event(json!({"event": "fatal", "attempt": state.attempts, "error": e.to_string()}));
                    return Err(e);
                }
            };
            match attempt {
                Attempt::Abandoned { execution_type, reason } => {
                    state.abandoned += 1;
                    consecutive += 1;
                    info!(attempt = state.attempts, %execution_type, %reason, "abandoned");
                    log.event(json!({
                        "event": "abandoned",
                        "attempt": state.attempts,
                        "execution_type": execution_type,
                        "reason": reason,
                    }));
                    if consecutive >= self.cfg.max_attempts_per_example {
                        let e = Error::Generation(format!("{consecutive} consecutive attempts abandoned"));
                        log.event(json!({"event": "fatal", "attempt": state.attempts, "error": e.to_string()}));
                        return Err(e);
                    }
                }
                Attempt::Accepted { mut example, staged } => {
                    consecutive = 0;
                    example.id = format!("ex-{:06}", state.accepted + 1);
                    example.metadata.generation_round = state.attempts;
                    example.metadata.commit_index = state.accepted as u64;
                    example.metadata.rng_seed = seed;
                    example.validate_against(&self.artifact.library)?;
                    writeln!(data, "{}", example_to_line(&example)?)
                        .and_then(|_| data.flush())
                        .map_err(|e| Error::io(&paths.dataset, e))?;
                    state.trackers.commit(&staged);
                    state.accepted += 1;
                    state.last_accepted_id = Some(example.id.clone());
                    queries.push(example.query.clone());
                    log.event(json!({
                        "event": "accepted",
                        "id": example.id,
                        "attempt": state.attempts,
                        "commit_index": example.metadata.commit_index,
                        "execution_type": example.execution_type,
                        "staged_values": staged.len(),
                    }));
                    let mut prng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
                    if state.monitor.after_accept(&queries, self.cfg, self.llm, &mut prng)? {
                        log.event(json!({"event": "pattern_analysis", "accepted": state.accepted}));
                    }
                    examples.push(example);
                    state.save(&paths.checkpoint)?;
                }
            }
        }
        log.event(json!({"event": "done", "accepted": state.accepted, "attempts": state.attempts}));
        Ok(RunSummary {
            accepted: state.accepted,
            attempts: state.attempts,
            abandoned: state.abandoned,
            resumed_at,
        })
    }
}
