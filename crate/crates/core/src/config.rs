//! Run configuration. Loaded from TOML; every field has a default so a
//! partial file (or none at all) is valid.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ExecutionType;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixtureWeights {
    pub single: f64,
    pub parallel: f64,
    pub sequential: f64,
    pub missing_params: f64,
    pub none: f64,
}

impl Default for MixtureWeights {
    fn default() -> Self {
        MixtureWeights {
            single: 1.0,
            parallel: 1.0,
            sequential: 1.0,
            missing_params: 1.0,
            none: 1.0,
        }
    }
}

impl MixtureWeights {
    pub fn weight(&self, t: ExecutionType) -> f64 {
        match t {
            ExecutionType::Single => self.single,
            ExecutionType::Parallel => self.parallel,
            ExecutionType::Sequential => self.sequential,
            ExecutionType::MissingParams => self.missing_params,
            ExecutionType::None => self.none,
        }
    }

    pub fn only(t: ExecutionType) -> Self {
        let mut w = MixtureWeights {
            single: 0.0,
            parallel: 0.0,
            sequential: 0.0,
            missing_params: 0.0,
            none: 0.0,
        };
        match t {
            ExecutionType::Single => w.single = 1.0,
            ExecutionType::Parallel => w.parallel = 1.0,
            ExecutionType::Sequential => w.sequential = 1.0,
            ExecutionType::MissingParams => w.missing_params = 1.0,
            ExecutionType::None => w.none = 1.0,
        }
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChatBackend {
    /// Deterministic offline responder; no network.
    Simulated,
    /// OpenAI-compatible `/chat/completions` endpoint.
    Http,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingBackend {
    Hash,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChatProviderConfig {
    pub backend: ChatBackend,
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    pub timeout_secs: u64,
}

impl Default for ChatProviderConfig {
    fn default() -> Self {
        ChatProviderConfig {
            backend: ChatBackend::Simulated,
            endpoint: "http://localhost:8000/v1".into(),
            model: String::new(),
            api_key_env: "TOOLFORGE_CHAT_API_KEY".into(),
            temperature: None,
            max_tokens: None,
            timeout_secs: 120,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingProviderConfig {
    pub backend: EmbeddingBackend,
    pub endpoint: String,
    pub model: String,
    pub api_key_env: String,
    pub dimension: usize,
    pub timeout_secs: u64,
}

impl Default for EmbeddingProviderConfig {
    fn default() -> Self {
        EmbeddingProviderConfig {
            backend: EmbeddingBackend::Hash,
            endpoint: "http://localhost:8000/v1".into(),
            model: String::new(),
            api_key_env: "TOOLFORGE_EMBEDDING_API_KEY".into(),
            dimension: 384,
            timeout_secs: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub rng_seed: u64,
    pub mixture: MixtureWeights,

    /// Cosine threshold for parameter grouping.
    pub grouping_threshold: f64,
    /// Cosine threshold for similarity-graph edges; falls back to the grouping threshold.
    pub graph_threshold: Option<f64>,

    pub walk_lambda: f64,
    /// Weight multiplier for the favored edge kind during walks.
    pub walk_bias: f64,
    pub walk_retries: usize,
    /// Minimum mean description similarity for a sampled function set.
    pub pairwise_similarity_threshold: f64,

    pub candidate_pool_size: usize,
    pub candidate_select: usize,
    pub optional_param_probability: f64,
    pub missing_param_probability: f64,
    /// How many functions per multi-call example receive diverse generation.
    pub diverse_functions_per_example: usize,

    pub rounds: usize,
    pub candidates_per_round: usize,
    pub reference_queries: usize,
    pub rrf_k: usize,
    pub batch_judging: bool,
    /// Rank the cumulative valid pool each round instead of the current round only.
    pub cumulative_ranking: bool,
    pub pattern_analysis_period: usize,
    pub pattern_sample_size: usize,
    /// Share of NONE examples that are vague requests rather than answerable-without-tools.
    pub none_vague_fraction: f64,

    pub retrieval_k: usize,

    pub retry_limit: usize,
    /// Attempts per example slot before the run gives up.
    pub max_attempts_per_example: usize,

    pub bootstrap_resamples: usize,
    pub bootstrap_fraction: f64,

    pub chat: ChatProviderConfig,
    pub embedding: EmbeddingProviderConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            rng_seed: 0,
            mixture: MixtureWeights::default(),
            grouping_threshold: 0.6,
            graph_threshold: None,
            walk_lambda: 0.75,
            walk_bias: 3.0,
            walk_retries: 32,
            pairwise_similarity_threshold: 0.3,
            candidate_pool_size: 25,
            candidate_select: 5,
            optional_param_probability: 0.3,
            missing_param_probability: 0.5,
            diverse_functions_per_example: 1,
            rounds: 5,
            candidates_per_round: 5,
            reference_queries: 10,
            rrf_k: 60,
            batch_judging: true,
            cumulative_ranking: true,
            pattern_analysis_period: 50,
            pattern_sample_size: 20,
            none_vague_fraction: 0.5,
            retrieval_k: 20,
            retry_limit: 3,
            max_attempts_per_example: 20,
            bootstrap_resamples: 100,
            bootstrap_fraction: 0.8,
            chat: ChatProviderConfig::default(),
            embedding: EmbeddingProviderConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn graph_threshold(&self) -> f64 {
        self.graph_threshold.unwrap_or(self.grouping_threshold)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let weights = ExecutionType::ALL.map(|t| self.mixture.weight(t));
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return bad("mixture weights must be finite and nonnegative".into());
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return bad("mixture weights must have a positive sum".into());
        }
        for (name, v) in [
            ("walk_retries", self.walk_retries),
            ("candidate_pool_size", self.candidate_pool_size),
            ("candidate_select", self.candidate_select),
            ("diverse_functions_per_example", self.diverse_functions_per_example),
            ("rounds", self.rounds),
            ("candidates_per_round", self.candidates_per_round),
            ("reference_queries", self.reference_queries),
            ("rrf_k", self.rrf_k),
            ("pattern_analysis_period", self.pattern_analysis_period),
            ("pattern_sample_size", self.pattern_sample_size),
            ("retrieval_k", self.retrieval_k),
            ("retry_limit", self.retry_limit),
            ("max_attempts_per_example", self.max_attempts_per_example),
            ("bootstrap_resamples", self.bootstrap_resamples),
            ("embedding.dimension", self.embedding.dimension),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.candidate_select > self.candidate_pool_size {
            return bad("candidate_select cannot exceed candidate_pool_size".into());
        }
        for (name, v) in [
            ("optional_param_probability", self.optional_param_probability),
            ("missing_param_probability", self.missing_param_probability),
            ("none_vague_fraction", self.none_vague_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1]"));
            }
        }
        for (name, v) in [
            ("grouping_threshold", self.grouping_threshold),
            ("graph_threshold", self.graph_threshold()),
            ("pairwise_similarity_threshold", self.pairwise_similarity_threshold),
        ] {
            if !(-1.0..=1.0).contains(&v) {
                return bad(format!("{name} is a cosine similarity and must lie in [-1, 1]"));
            }
        }
        if !(self.bootstrap_fraction > 0.0 && self.bootstrap_fraction <= 1.0) {
            return bad("bootstrap_fraction must lie in (0, 1]".into());
        }
        if !(self.walk_lambda >= 0.0 && self.walk_lambda.is_finite()) {
            return bad("walk_lambda must be finite and nonnegative".into());
        }
        if !(self.walk_bias > 0.0 && self.walk_bias.is_finite()) {
            return bad("walk_bias must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.grouping_threshold, 0.6);
        assert_eq!(cfg.walk_lambda, 0.75);
        assert_eq!(cfg.rrf_k, 60);
        assert_eq!(cfg.retrieval_k, 20);
        assert_eq!((cfg.candidate_pool_size, cfg.candidate_select), (25, 5));
        assert_eq!(cfg.retry_limit, 3);
        assert_eq!(cfg.graph_threshold(), 0.6);
    }

    #[test]
    fn example_config_matches_defaults() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/config.example.toml");
        assert_eq!(RunConfig::load(path).unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_toml_keeps_defaults() {
        let cfg = RunConfig::from_toml_str("rng_seed = 9\n[mixture]\nnone = 0.0\n").unwrap();
        assert_eq!(cfg.rng_seed, 9);
        assert_eq!(cfg.mixture.none, 0.0);
        assert_eq!(cfg.mixture.single, 1.0);
        assert_eq!(cfg.rounds, 5);
    }

    #[test]
    fn zero_mixture_is_rejected() {
        let text = "[mixture]\nsingle=0\nparallel=0\nsequential=0\nmissing_params=0\nnone=0\n";
        assert!(matches!(RunConfig::from_toml_str(text), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml_str("roundz = 3").is_err());
    }

    #[test]
    fn zero_counts_are_rejected() {
        assert!(RunConfig::from_toml_str("rounds = 0").is_err());
        assert!(RunConfig::from_toml_str("candidate_select = 30").is_err());
    }
}
