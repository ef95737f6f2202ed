use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use tracing_subscriber::EnvFilter;

use toolforge::evaluate::{
    Correction, PredictionItem, ReferenceItem, analyze_corpus, compare_argument_diversity, compare_linguistic_diversity,
    evaluate_predictions, frequency_table,
};
use toolforge::metrics::Bootstrap;
use toolforge::model::{load_function_library, read_dataset};
use toolforge::pipeline::{Generator, RunPaths};
use toolforge::preprocess::{EdgeKind, PreprocessArtifact};
use toolforge::providers::{chat_from_config, embedder_from_config};
use toolforge::{Error, GeneratedExample, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "toolforge", version, about = "Diverse synthetic function-calling data generation")]
struct Cli {
    /// TOML run configuration. Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides `rng_seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Group parameters, build API pools and the similarity graph.
    Preprocess {
        /// JSON function library.
        library: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate `n` examples from a preprocessing artifact.
    Generate {
        artifact: PathBuf,
        #[arg(long)]
        n: usize,
        /// Dataset path; the checkpoint and run log are written next to it.
        #[arg(long)]
        out: PathBuf,
        /// Continue from the checkpoint next to `--out`.
        #[arg(long)]
        resume: bool,
    },
    /// Linguistic diversity of one corpus (JSONL dataset or one query per line).
    Analyze {
        dataset: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also export per-group argument value frequencies.
        #[arg(long)]
        artifact: Option<PathBuf>,
    },
    /// Compare two corpora; with both libraries, argument diversity too.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, requires = "library_b")]
        library_a: Option<PathBuf>,
        #[arg(long, requires = "library_a")]
        library_b: Option<PathBuf>,
    },
    /// Score model predictions against reference calls.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        references: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = CorrectionArg::Holm)]
        correction: CorrectionArg,
        /// Accept textually different calls the chat model judges equivalent.
        #[arg(long, requires = "library")]
        judge: bool,
        #[arg(long)]
        library: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum CorrectionArg {
    None,
    Holm,
}

impl From<CorrectionArg> for Correction {
    fn from(c: CorrectionArg) -> Self {
        match c {
            CorrectionArg::None => Correction::None,
            CorrectionArg::Holm => Correction::Holm,
        }
    }
}

/// Usage and input problems exit with 2, everything else with 1.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::Io { .. }
            | Error::Library { .. }
            | Error::DuplicateFunction(_)
            | Error::DatasetLine { .. }
            | Error::Config(_)
            | Error::InvalidInput(_)
            | Error::Json(_),
        ) => 2,
        Some(_) => 1,
        None if err.downcast_ref::<std::io::Error>().is_some() => 2,
        None => 1,
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.rng_seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn bootstrap(cfg: &RunConfig) -> Bootstrap {
    Bootstrap {
        resamples: cfg.bootstrap_resamples,
        fraction: cfg.bootstrap_fraction,
        seed: cfg.rng_seed,
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn is_dataset(text: &str) -> bool {
    text.lines().find(|l| !l.trim().is_empty()).is_some_and(|l| l.trim_start().starts_with('{'))
}

/// Queries from a JSONL dataset, or the non-empty lines of a plain text file.
fn load_texts(path: &Path) -> anyhow::Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    if is_dataset(&text) {
        return Ok(read_dataset(path)?.into_iter().map(|e| e.query).collect());
    }
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_owned).collect())
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| {
                Error::DatasetLine {
                    line: i + 1,
                    reason: format!("{}: {e}", path.display()),
                }
                .into()
            })
        })
        .collect()
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Preprocess { library, out } => {
            let lib = load_function_library(&library)?;
            let embedder = embedder_from_config(&cfg.embedding)?;
            let art = PreprocessArtifact::build(lib, embedder.as_ref(), &cfg)?;
            art.save(&out)?;
            let summary = json!({
                "functions": art.library.functions().len(),
                "groups": art.groups.len(),
                "p_p_edges": art.graph.count(EdgeKind::ParamParam),
                "p_r_edges": art.graph.count(EdgeKind::ParamReturn),
                "artifact": out,
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Generate { artifact, n, out, resume } => {
            let art = PreprocessArtifact::load(&artifact)?;
            let llm = chat_from_config(&cfg.chat)?;
            let embedder = embedder_from_config(&cfg.embedding)?;
            let paths = RunPaths::for_output(&out);
            let summary = Generator::new(&art, llm.as_ref(), embedder.as_ref(), &cfg).run(n, &paths, resume)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Analyze { dataset, out, artifact } => {
            let texts = load_texts(&dataset)?;
            let embedder = embedder_from_config(&cfg.embedding)?;
            let report = analyze_corpus(&texts, embedder.as_ref(), bootstrap(&cfg))?;
            print!("{}", report.to_table());
            let frequencies = match artifact {
                Some(p) => {
                    let art = PreprocessArtifact::load(&p)?;
                    let examples: Vec<GeneratedExample> = read_dataset(&dataset)?;
                    Some(frequency_table(&examples, &art.groups))
                }
                None => None,
            };
            if let Some(path) = out {
                write_json(&path, &json!({"report": report, "frequencies": frequencies}))?;
            }
        }
        Command::Compare { a, b, out, library_a, library_b } => {
            let embedder = embedder_from_config(&cfg.embedding)?;
            let report = compare_linguistic_diversity(&load_texts(&a)?, &load_texts(&b)?, embedder.as_ref(), bootstrap(&cfg))?;
            print!("{}", report.to_table());
            let arguments = match (library_a, library_b) {
                (Some(la), Some(lb)) => {
                    let r = compare_argument_diversity(
                        &read_dataset(&a)?,
                        &load_function_library(&la)?,
                        &read_dataset(&b)?,
                        &load_function_library(&lb)?,
                        embedder.as_ref(),
                        cfg.grouping_threshold,
                        bootstrap(&cfg),
                    )?;
                    if r.rows.is_empty() {
                        tracing::warn!("no parameter group has twenty values in both datasets");
                    }
                    print!("\n{}", r.to_table());
                    Some(r)
                }
                _ => None,
            };
            if let Some(path) = out {
                write_json(&path, &json!({"linguistic": report, "arguments": arguments}))?;
            }
        }
        Command::Evaluate { predictions, references, out, alpha, correction, judge, library } => {
            let refs: Vec<ReferenceItem> = read_jsonl(&references)?;
            let preds: Vec<PredictionItem> = read_jsonl(&predictions)?;
            let report = if judge {
                let lib = load_function_library(library.as_deref().expect("clap enforces --library"))?;
                let llm = chat_from_config(&cfg.chat)?;
                evaluate_predictions(&refs, &preds, alpha, correction.into(), Some((llm.as_ref(), &lib, cfg.retry_limit)))?
            } else {
                evaluate_predictions(&refs, &preds, alpha, correction.into(), None)?
            };
            print!("{}", report.to_table());
            if let Some(path) = out {
                write_json(&path, &report)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
