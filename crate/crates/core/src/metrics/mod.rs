//! Diversity metrics, clustering, rank fusion and statistics.

pub mod cluster;
pub mod compression;
pub mod lexical;
pub mod readability;
pub mod rrf;
pub mod semantic;
pub mod stats;
pub mod syntax;

use serde::{Deserialize, Serialize};

pub use cluster::{
    Assignment, ClusterPartition, DistanceMetric, dbscan, entropy_bits, partition_entropy,
    query_cluster_entropy, value_cluster_entropy,
};
pub use compression::{compression_ratio_diversity, ncd_diversity};
pub use lexical::{simpson_index, type_token_ratio};
pub use readability::{fkgl_grade, variance};
pub use rrf::{Fused, ranks_descending, rrf_fuse};
pub use semantic::{chamfer_distance_score, cosine, paraphrase_variety, semantic_spread, vendi_score};
pub use stats::{Bootstrap, Direction, Significance, bootstrap_std, holm_bonferroni, mcnemar, significance};
pub use syntax::{ShallowChunker, SyntaxAnalyzer, Tree, avg_tree_edit_distance, parse_tree_entropy, tree_edit_distance};

use crate::error::{Error, Result};

/// Corpus-level diversity measures. Higher is more diverse for every one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    TypeTokenRatio,
    CompressionRatio,
    ParaphraseVariety,
    ParseTreeEntropy,
    Chamfer,
    VarFkgl,
    VarLength,
    Vendi,
    Simpson,
    TreeEditDistance,
    QueryClusterEntropy,
    SemanticSpread,
}

impl Metric {
    /// The eight metrics used to rank query candidates.
    pub const RANKING: [Metric; 8] = [
        Metric::TypeTokenRatio,
        Metric::CompressionRatio,
        Metric::ParaphraseVariety,
        Metric::ParseTreeEntropy,
        Metric::Chamfer,
        Metric::VarFkgl,
        Metric::VarLength,
        Metric::Vendi,
    ];

    pub const ALL: [Metric; 12] = [
        Metric::TypeTokenRatio,
        Metric::CompressionRatio,
        Metric::ParaphraseVariety,
        Metric::ParseTreeEntropy,
        Metric::Chamfer,
        Metric::VarFkgl,
        Metric::VarLength,
        Metric::Vendi,
        Metric::Simpson,
        Metric::TreeEditDistance,
        Metric::QueryClusterEntropy,
        Metric::SemanticSpread,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::TypeTokenRatio => "ttr",
            Metric::CompressionRatio => "compression_ratio",
            Metric::ParaphraseVariety => "paraphrase_variety",
            Metric::ParseTreeEntropy => "parse_tree_entropy",
            Metric::Chamfer => "chamfer",
            Metric::VarFkgl => "var_fkgl",
            Metric::VarLength => "var_length",
            Metric::Vendi => "vendi",
            Metric::Simpson => "simpson",
            Metric::TreeEditDistance => "tree_edit_distance",
            Metric::QueryClusterEntropy => "query_cluster_entropy",
            Metric::SemanticSpread => "semantic_spread",
        }
    }

    pub fn needs_embeddings(self) -> bool {
        matches!(
            self,
            Metric::ParaphraseVariety
                | Metric::Chamfer
                | Metric::Vendi
                | Metric::QueryClusterEntropy
                | Metric::SemanticSpread
        )
    }
}

/// Texts with their embeddings, aligned by index.
#[derive(Debug, Clone, Copy)]
pub struct CorpusView<'a> {
    pub texts: &'a [String],
    pub embeddings: &'a [Vec<f64>],
}

impl<'a> CorpusView<'a> {
    pub fn new(texts: &'a [String], embeddings: &'a [Vec<f64>]) -> Result<Self> {
        if texts.len() != embeddings.len() {
            return Err(Error::invalid("texts and embeddings differ in length"));
        }
        Ok(CorpusView { texts, embeddings })
    }

    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }
}

pub fn compute_metric(metric: Metric, texts: &[String], embeddings: &[Vec<f64>], analyzer: &dyn SyntaxAnalyzer) -> Result<f64> {
    match metric {
        Metric::TypeTokenRatio => type_token_ratio(texts),
        Metric::CompressionRatio => compression_ratio_diversity(texts),
        Metric::ParaphraseVariety => paraphrase_variety(embeddings),
        Metric::ParseTreeEntropy => parse_tree_entropy(texts, analyzer),
        Metric::Chamfer => chamfer_distance_score(embeddings),
        Metric::VarFkgl => {
            let grades = texts.iter().map(|t| fkgl_grade(t)).collect::<Result<Vec<_>>>()?;
            Ok(variance(&grades))
        }
        Metric::VarLength => Ok(variance(&lexical::token_lengths(texts))),
        Metric::Vendi => vendi_score(embeddings),
        Metric::Simpson => simpson_index(texts),
        Metric::TreeEditDistance => avg_tree_edit_distance(texts, analyzer),
        Metric::QueryClusterEntropy => query_cluster_entropy(embeddings),
        Metric::SemanticSpread => semantic_spread(embeddings),
    }
}

/// Evaluates a metric on the sub-corpus selected by `indices`.
pub fn compute_metric_on(metric: Metric, corpus: CorpusView<'_>, indices: &[usize], analyzer: &dyn SyntaxAnalyzer) -> Result<f64> {
    let texts: Vec<String> = indices.iter().map(|&i| corpus.texts[i].clone()).collect();
    let emb: Vec<Vec<f64>> = if metric.needs_embeddings() {
        indices.iter().map(|&i| corpus.embeddings[i].clone()).collect()
    } else {
        Vec::new()
    };
    compute_metric(metric, &texts, &emb, analyzer)
}
