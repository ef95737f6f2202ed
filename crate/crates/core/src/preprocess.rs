//! Parameter grouping, API pools and the API similarity graph.

use std::collections::HashMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::metrics::semantic::similarity_matrix;
use crate::model::{FunctionLibrary, ParamCategory, ParameterSpec};
use crate::providers::Embedder;

/// The text embedded for a parameter when grouping and linking functions.
pub fn describe_parameter(spec: &ParameterSpec) -> String {
    let mut s = format!(
        "The {} parameter is a {} that {}",
        spec.name, spec.declared_type, spec.description
    );
    if spec.category == ParamCategory::Enum {
        s.push_str(" and must be one of: ");
        s.push_str(&spec.enum_values.join(", "));
    }
    s
}

fn describe_field(name: &str, ty: &str, description: &str) -> String {
    format!("The {name} parameter is a {ty} that {description}")
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParamRef {
    pub function: String,
    pub parameter: String,
}

impl ParamRef {
    pub fn new(function: impl Into<String>, parameter: impl Into<String>) -> Self {
        ParamRef {
            function: function.into(),
            parameter: parameter.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterGroup {
    pub id: usize,
    pub category: ParamCategory,
    /// The first member is the seed the others were compared against.
    pub members: Vec<ParamRef>,
}

/// Single-pass, seed-anchored grouping. Parameters are visited in library
/// order; an ungrouped parameter opens a group and absorbs every later
/// ungrouped parameter of the same category whose description embedding has
/// cosine >= `threshold` with it.
pub fn group_parameters(library: &FunctionLibrary, embedder: &dyn Embedder, threshold: f64) -> Result<Vec<ParameterGroup>> {
    if library.is_empty() {
        return Err(Error::invalid("cannot group parameters of an empty library"));
    }
    let params: Vec<(ParamRef, &ParameterSpec)> = library
        .iter()
        .flat_map(|f| f.parameters.iter().map(move |p| (ParamRef::new(&f.name, &p.name), p)))
        .collect();
    if params.is_empty() {
        return Ok(Vec::new());
    }
    let texts: Vec<String> = params.iter().map(|(_, p)| describe_parameter(p)).collect();
    let sim = similarity_matrix(&embedder.embed(&texts)?)?;

    let mut assigned = vec![false; params.len()];
    let mut groups = Vec::new();
    for seed in 0..params.len() {
        if assigned[seed] {
            continue;
        }
        assigned[seed] = true;
        let category = params[seed].1.category;
        let mut members = vec![params[seed].0.clone()];
        for j in seed + 1..params.len() {
            if !assigned[j] && params[j].1.category == category && sim[seed][j] >= threshold {
                assigned[j] = true;
                members.push(params[j].0.clone());
            }
        }
        groups.push(ParameterGroup {
            id: groups.len(),
            category,
            members,
        });
    }
    Ok(groups)
}

/// `(function, parameter) -> group id`.
pub fn group_index(groups: &[ParameterGroup]) -> HashMap<ParamRef, usize> {
    groups
        .iter()
        .flat_map(|g| g.members.iter().map(move |m| (m.clone(), g.id)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiPools {
    pub general: Vec<String>,
    pub focused: Vec<String>,
    pub other: Vec<String>,
}

impl ApiPools {
    pub fn all(&self) -> [&[String]; 3] {
        [&self.general, &self.focused, &self.other]
    }
}

/// Per-function weight for the focused pool: the size of the largest group
/// any of its parameters belongs to. Functions without parameters weigh 0.
pub fn focused_weights(library: &FunctionLibrary, groups: &[ParameterGroup]) -> Vec<f64> {
    let index = group_index(groups);
    library
        .iter()
        .map(|f| {
            f.parameters
                .iter()
                .filter_map(|p| index.get(&ParamRef::new(&f.name, &p.name)))
                .map(|&g| groups[g].members.len())
                .max()
                .unwrap_or(0) as f64
        })
        .collect()
}

/// Draws `k` distinct indices, one at a time, each with probability
/// proportional to its weight among those not yet drawn. One `f64` is
/// consumed from `rng` per draw.
pub fn weighted_draw_without_replacement(weights: &[f64], k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    let mut out = Vec::new();
    while out.len() < k && !remaining.is_empty() {
        let total: f64 = remaining.iter().map(|&i| weights[i]).sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = remaining.len() - 1;
        for (pos, &i) in remaining.iter().enumerate() {
            if u < weights[i] {
                pick = pos;
                break;
            }
            u -= weights[i];
        }
        out.push(remaining.remove(pick));
    }
    out
}

/// General pool is the whole library, the focused pool is a weighted draw of
/// `ceil(n / 3)` functions favoring large groups, and the other pool holds the
/// functions with at least one OTHER parameter. Pools keep library order.
pub fn build_api_pools(library: &FunctionLibrary, groups: &[ParameterGroup], rng: &mut impl Rng) -> ApiPools {
    let names: Vec<String> = library.iter().map(|f| f.name.clone()).collect();
    let size = library.len().div_ceil(3);
    let mut picked = weighted_draw_without_replacement(&focused_weights(library, groups), size, rng);
    picked.sort_unstable();
    ApiPools {
        general: names.clone(),
        focused: picked.into_iter().map(|i| names[i].clone()).collect(),
        other: library
            .iter()
            .filter(|f| f.parameters.iter().any(|p| p.category == ParamCategory::Other))
            .map(|f| f.name.clone())
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    /// Similar inputs; undirected.
    #[serde(rename = "P-P")]
    ParamParam,
    /// An output of `from` resembles an input of `to`; directed.
    #[serde(rename = "P-R")]
    ParamReturn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiEdge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiGraph {
    pub vertices: Vec<String>,
    /// P-P edges are stored once with `from < to`.
    pub edges: Vec<ApiEdge>,
}

impl ApiGraph {
    pub fn has_edge(&self, from: &str, to: &str, kind: EdgeKind) -> bool {
        let (Some(a), Some(b)) = (self.position(from), self.position(to)) else {
            return false;
        };
        self.edges.iter().any(|e| {
            e.kind == kind
                && ((e.from == a && e.to == b) || (kind == EdgeKind::ParamParam && e.from == b && e.to == a))
        })
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }

    /// Edges leaving `v`. P-P edges count in both directions; P-R edges only
    /// from their source unless `undirected` is set.
    pub fn out_edges(&self, v: usize, undirected: bool) -> Vec<(usize, EdgeKind, f64)> {
        let mut out = Vec::new();
        for e in &self.edges {
            let both = undirected || e.kind == EdgeKind::ParamParam;
            if e.from == v {
                out.push((e.to, e.kind, e.weight));
            } else if both && e.to == v {
                out.push((e.from, e.kind, e.weight));
            }
        }
        out
    }

    pub fn count(&self, kind: EdgeKind) -> usize {
        self.edges.iter().filter(|e| e.kind == kind).count()
    }
}

pub fn build_similarity_graph(library: &FunctionLibrary, embedder: &dyn Embedder, threshold: f64) -> Result<ApiGraph> {
    let n = library.len();
    let mut texts = Vec::new();
    // (owner, is_return)
    let mut owners = Vec::new();
    for (i, f) in library.iter().enumerate() {
        for p in &f.parameters {
            texts.push(describe_parameter(p));
            owners.push((i, false));
        }
        if let Some(rs) = &f.return_schema {
            for field in rs.all_fields() {
                texts.push(describe_field(&field.name, &field.field_type, &field.description));
                owners.push((i, true));
            }
        }
    }
    let vertices: Vec<String> = library.iter().map(|f| f.name.clone()).collect();
    if texts.is_empty() {
        return Ok(ApiGraph { vertices, edges: Vec::new() });
    }
    let sim = similarity_matrix(&embedder.embed(&texts)?)?;

    let mut pp = vec![vec![f64::NEG_INFINITY; n]; n];
    let mut pr = vec![vec![f64::NEG_INFINITY; n]; n];
    for a in 0..texts.len() {
        for b in 0..texts.len() {
            let ((fa, ra), (fb, rb)) = (owners[a], owners[b]);
            if fa == fb || sim[a][b] < threshold {
                continue;
            }
            match (ra, rb) {
                (false, false) => pp[fa][fb] = pp[fa][fb].max(sim[a][b]),
                (true, false) => pr[fa][fb] = pr[fa][fb].max(sim[a][b]),
                _ => {}
            }
        }
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u < v && pp[u][v].is_finite() {
                edges.push(ApiEdge { from: u, to: v, kind: EdgeKind::ParamParam, weight: pp[u][v] });
            }
        }
    }
    for u in 0..n {
        for v in 0..n {
            if pr[u][v].is_finite() {
                edges.push(ApiEdge { from: u, to: v, kind: EdgeKind::ParamReturn, weight: pr[u][v] });
            }
        }
    }
    Ok(ApiGraph { vertices, edges })
}

/// Everything `generate` needs besides the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessArtifact {
    pub grouping_threshold: f64,
    pub graph_threshold: f64,
    pub seed: u64,
    pub library: FunctionLibrary,
    pub groups: Vec<ParameterGroup>,
    pub pools: ApiPools,
    pub graph: ApiGraph,
}

impl PreprocessArtifact {
    pub fn build(library: FunctionLibrary, embedder: &dyn Embedder, cfg: &RunConfig) -> Result<Self> {
        use rand::SeedableRng;
        let groups = group_parameters(&library, embedder, cfg.grouping_threshold)?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        let pools = build_api_pools(&library, &groups, &mut rng);
        let graph = build_similarity_graph(&library, embedder, cfg.graph_threshold())?;
        Ok(PreprocessArtifact {
            grouping_threshold: cfg.grouping_threshold,
            graph_threshold: cfg.graph_threshold(),
            seed: cfg.rng_seed,
            library,
            groups,
            pools,
            graph,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_function_library;
    use crate::providers::HashEmbedder;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn spec(name: &str, ty: &str, desc: &str, enums: &[&str]) -> ParameterSpec {
        let enum_values: Vec<String> = enums.iter().map(|s| s.to_string()).collect();
        ParameterSpec {
            name: name.into(),
            description: desc.into(),
            declared_type: ty.into(),
            category: crate::model::classify_parameter_type(ty, &enum_values),
            enum_values,
            required: true,
        }
    }

    #[test]
    fn description_template() {
        assert_eq!(
            describe_parameter(&spec("city", "string", "names the target city", &[])),
            "The city parameter is a string that names the target city"
        );
        assert!(describe_parameter(&spec("unit", "string", "unit", &["a", "b"])).ends_with("and must be one of: a, b"));
        assert_eq!(describe_parameter(&spec("x", "integer", "", &[])), "The x parameter is a integer that ");
    }

    fn lib(json: &str) -> FunctionLibrary {
        parse_function_library(json).unwrap()
    }

    #[test]
    fn identical_descriptions_share_a_group() {
        let l = lib(r#"[
            {"name":"f","description":"","parameters":{"type":"object","properties":{"city":{"type":"string","description":"town to look up"}}}},
            {"name":"g","description":"","parameters":{"type":"object","properties":{"city":{"type":"string","description":"town to look up"}}}}
        ]"#);
        let g = group_parameters(&l, &HashEmbedder::default(), 0.6).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].members.len(), 2);
    }

    /// Embedder with a hand-set similarity structure, keyed by text.
    struct Fixed(Vec<(String, Vec<f64>)>);
    impl Embedder for Fixed {
        fn dimension(&self) -> usize {
            3
        }
        fn embed(&self, texts: &[String]) -> std::result::Result<Vec<Vec<f64>>, crate::error::ProviderError> {
            Ok(texts
                .iter()
                .map(|t| self.0.iter().find(|(k, _)| t.contains(k.as_str())).unwrap().1.clone())
                .collect())
        }
    }

    #[test]
    fn grouping_is_seed_anchored() {
        // cos(a,b) = cos(a,c) = 0.7 and cos(b,c) = 0.2 by construction.
        let (x, y) = (0.7f64, (1.0f64 - 0.49).sqrt());
        let b = vec![x, y, 0.0];
        let cz = (0.2 - x * x) / y;
        let c = vec![x, cz, (1.0 - x * x - cz * cz).sqrt()];
        let emb = Fixed(vec![
            ("alpha".into(), vec![1.0, 0.0, 0.0]),
            ("beta".into(), b),
            ("gamma".into(), c),
        ]);
        let l = lib(r#"[{"name":"f","description":"","parameters":{"type":"object","properties":{
            "a":{"type":"string","description":"alpha"},
            "b":{"type":"string","description":"beta"},
            "c":{"type":"string","description":"gamma"}}}}]"#);
        let g = group_parameters(&l, &emb, 0.6).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].members.len(), 3);
    }

    #[test]
    fn categories_never_mix() {
        let l = lib(r#"[
            {"name":"f","description":"","parameters":{"type":"object","properties":{"n":{"type":"string","description":"shared words here"}}}},
            {"name":"g","description":"","parameters":{"type":"object","properties":{"n":{"type":"integer","description":"shared words here"}}}}
        ]"#);
        let g = group_parameters(&l, &HashEmbedder::default(), 0.1).unwrap();
        assert_eq!(g.len(), 2);
    }

    #[test]
    fn weighted_draw_matches_manual_trace() {
        let w = [1.0, 3.0, 0.0, 2.0];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let got = weighted_draw_without_replacement(&w, 2, &mut rng);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut left = vec![0usize, 1, 3];
        let mut want = Vec::new();
        for _ in 0..2 {
            let total: f64 = left.iter().map(|&i| w[i]).sum();
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let pos = left
                .iter()
                .position(|&i| {
                    acc += w[i];
                    u < acc
                })
                .unwrap_or(left.len() - 1);
            want.push(left.remove(pos));
        }
        assert_eq!(got, want);
        assert!(!got.contains(&2));
    }

    #[test]
    fn graph_edges() {
        let l = lib(r#"[
            {"name":"f","description":"","parameters":{"type":"object","properties":{"city":{"type":"string","description":"town to look up"}}},
             "returns":{"type":"object","properties":{"video_url":{"type":"string","description":"link to the clip"}}}},
            {"name":"g","description":"","parameters":{"type":"object","properties":{"city":{"type":"string","description":"town to look up"}}}},
            {"name":"h","description":"","parameters":{"type":"object","properties":{"video_url":{"type":"string","description":"link to the clip"}}}}
        ]"#);
        let e = HashEmbedder::default();
        let gr = build_similarity_graph(&l, &e, 0.99).unwrap();
        assert!(gr.has_edge("f", "g", EdgeKind::ParamParam));
        assert!(gr.has_edge("g", "f", EdgeKind::ParamParam));
        assert!(gr.has_edge("f", "h", EdgeKind::ParamReturn));
        assert!(!gr.has_edge("h", "f", EdgeKind::ParamReturn));
        assert!(build_similarity_graph(&l, &e, 1.01).unwrap().edges.is_empty());
    }

    #[test]
    fn pools_without_other_params() {
        let l = lib(r#"[{"name":"f","description":"","parameters":{"type":"object","properties":{"x":{"type":"integer","description":"count"}}}}]"#);
        let g = group_parameters(&l, &HashEmbedder::default(), 0.6).unwrap();
        let p = build_api_pools(&l, &g, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(p.other.is_empty());
        assert_eq!(p.general, vec!["f"]);
        assert_eq!(p.focused, vec!["f"]);
        let members: HashSet<_> = g.iter().flat_map(|g| g.members.clone()).collect();
        assert_eq!(members.len(), 1);
    }
}
