//! DBSCAN and the cluster-entropy diversity measures built on it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ParamCategory;
use crate::providers::Embedder;

use super::semantic::normalized;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    Euclidean,
    /// `1 - cos(a, b)`.
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Assignment {
    Cluster(usize),
    Noise,
}

/// Result of a DBSCAN run. Cluster ids are numbered in the order their first
/// core point appears in the input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterPartition {
    pub assignments: Vec<Assignment>,
    pub cluster_sizes: Vec<usize>,
}

impl ClusterPartition {
    pub fn noise_count(&self) -> usize {
        self.assignments
            .iter()
            .filter(|a| matches!(a, Assignment::Noise))
            .count()
    }

    /// Cluster sizes with every noise point counted as its own cluster.
    pub fn sizes_with_singletons(&self) -> Vec<usize> {
        let mut sizes = self.cluster_sizes.clone();
        sizes.extend(std::iter::repeat_n(1, self.noise_count()));
        sizes
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Neighbor lists (self included, `dist <= eps`).
fn neighborhoods(points: &[Vec<f64>], eps: f64, metric: DistanceMetric) -> Result<Vec<Vec<usize>>> {
    let prepared: Vec<Vec<f64>> = match metric {
        DistanceMetric::Euclidean => points.to_vec(),
        DistanceMetric::Cosine => points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                normalized(p).ok_or_else(|| {
                    Error::invalid(format!("point {i} has zero norm under cosine distance"))
                })
            })
            .collect::<Result<_>>()?,
    };
    let dist = |a: &[f64], b: &[f64]| match metric {
        DistanceMetric::Euclidean => euclidean(a, b),
        DistanceMetric::Cosine => 1.0 - a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>(),
    };
    Ok(prepared
        .par_iter()
        .map(|p| {
            prepared
                .iter()
                .enumerate()
                .filter(|(_, q)| dist(p, q) <= eps)
                .map(|(j, _)| j)
                .collect()
        })
        .collect())
}

pub fn dbscan(
    points: &[Vec<f64>],
    eps: f64,
    min_samples: usize,
    metric: DistanceMetric,
) -> Result<ClusterPartition> {
    if points.is_empty() {
        return Err(Error::invalid("dbscan needs at least one point"));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid("eps must be positive"));
    }
    if min_samples == 0 {
        return Err(Error::invalid("min_samples must be at least 1"));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::invalid("points have inconsistent dimensions"));
    }

    let neighbors = neighborhoods(points, eps, metric)?;
    let core: Vec<bool> = neighbors.iter().map(|n| n.len() >= min_samples).collect();
    let n = points.len();
    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut sizes = Vec::new();

    // Expand clusters through core points only; borders are attached after.
    for seed in 0..n {
        if !core[seed] || label[seed].is_some() {
            continue;
        }
        let id = sizes.len();
        let mut stack = vec![seed];
        label[seed] = Some(id);
        while let Some(p) = stack.pop() {
            for &q in &neighbors[p] {
                if core[q] && label[q].is_none() {
                    label[q] = Some(id);
                    stack.push(q);
                }
            }
        }
        sizes.push(0);
    }
    for p in 0..n {
        if !core[p] {
            label[p] = neighbors[p].iter().filter(|&&q| core[q]).filter_map(|&q| label[q]).min();
        }
    }

    let assignments = label
        .iter()
        .map(|l| match l {
            Some(id) => {
                sizes[*id] += 1;
                Assignment::Cluster(*id)
            }
            None => Assignment::Noise,
        })
        .collect();
    Ok(ClusterPartition {
        assignments,
        cluster_sizes: sizes,
    })
}

/// Base-2 Shannon entropy of a size distribution.
pub fn entropy_bits(sizes: &[usize]) -> f64 {
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let h: f64 = sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

pub fn partition_entropy(p: &ClusterPartition) -> f64 {
    entropy_bits(&p.sizes_with_singletons())
}

pub const NUMERICAL_EPS: f64 = 0.5;
pub const STRING_EPS: f64 = 0.1;
pub const QUERY_EPS: f64 = 0.3;
pub const MIN_SAMPLES: usize = 2;

pub fn parse_numeric(values: &[String]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(values.len());
    let mut bad = Vec::new();
    for v in values {
        match v.trim().parse::<f64>() {
            Ok(x) if x.is_finite() => out.push(x),
            _ => bad.push(v.as_str()),
        }
    }
    if !bad.is_empty() {
        return Err(Error::invalid(format!("non-numeric values: {}", bad.join(", "))));
    }
    Ok(out)
}

pub fn numeric_cluster_entropy(values: &[f64]) -> Result<f64> {
    let points: Vec<Vec<f64>> = values.iter().map(|&x| vec![x]).collect();
    let part = dbscan(&points, NUMERICAL_EPS, MIN_SAMPLES, DistanceMetric::Euclidean)?;
    Ok(partition_entropy(&part))
}

pub fn embedding_cluster_entropy(embeddings: &[Vec<f64>], eps: f64) -> Result<f64> {
    let part = dbscan(embeddings, eps, MIN_SAMPLES, DistanceMetric::Cosine)?;
    Ok(partition_entropy(&part))
}

/// Argument-value diversity: DBSCAN cluster entropy with noise as singletons.
pub fn value_cluster_entropy(
    values: &[String],
    category: ParamCategory,
    embedder: &dyn Embedder,
) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("value_cluster_entropy needs at least one value"));
    }
    match category {
        ParamCategory::Numerical => numeric_cluster_entropy(&parse_numeric(values)?),
        ParamCategory::String => {
            let emb = embedder.embed(values)?;
            embedding_cluster_entropy(&emb, STRING_EPS)
        }
        other => Err(Error::invalid(format!("cluster entropy undefined for {other} values"))),
    }
}

pub fn query_cluster_entropy(embeddings: &[Vec<f64>]) -> Result<f64> {
    embedding_cluster_entropy(embeddings, QUERY_EPS)
}
