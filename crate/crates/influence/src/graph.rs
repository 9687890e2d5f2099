//! Directed graphs in CSR form with per-edge activation probabilities.
//!
//! Nodes are dense `u32` ids; when a graph is loaded from an edge list the
//! original string labels are kept in a side table. Edges also get dense ids
//! (their position in the forward CSR), which lets the cascade machinery
//! track observed edges in plain bitsets.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::rng::StreamKey;
use rand::Rng;

pub type NodeId = u32;
pub type EdgeId = u32;

/// How activation probabilities are assigned to edges.
#[derive(Clone, Debug, PartialEq)]
pub enum ProbModel {
    /// `p(u,v) = 1 / indegree(v)`, computed after duplicate edges are merged.
    WeightedCascade,
    /// The same probability on every edge; must lie in `(0, 1]`.
    Uniform(f64),
    /// `p(u,v) = w(u,v) / max_w`, where weights of duplicate edges are summed
    /// first and `max_w` is the largest merged weight. The divisor is recorded
    /// in [`GraphMeta::normalizer`].
    ExplicitWeights,
}

impl ProbModel {
    pub fn describe(&self) -> String {
        match self {
            ProbModel::WeightedCascade => "weighted-cascade".to_string(),
            ProbModel::Uniform(p) => format!("uniform({p})"),
            ProbModel::ExplicitWeights => "explicit-weights".to_string(),
        }
    }
}

/// Provenance carried alongside a graph and embedded in result files.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GraphMeta {
    pub nodes: usize,
    pub edges: usize,
    pub prob_model: String,
    /// Weight divisor applied under the explicit-weights model.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalizer: Option<f64>,
    /// Set when the graph came from a generator rather than a file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("edge list is empty")]
    EmptyInput,
    #[error("uniform probability {0} outside (0, 1]")]
    BadProbability(f64),
    #[error("{0}")]
    BadParam(String),
}

/// A directed graph with forward and reverse CSR adjacency.
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    // Forward CSR. Edge id e is the index into `fwd_targets`; `fwd_sources[e]`
    // gives the source for O(1) endpoint lookup.
    fwd_offsets: Vec<u32>,
    fwd_targets: Vec<NodeId>,
    fwd_sources: Vec<NodeId>,
    // Reverse CSR over the same edge ids.
    rev_offsets: Vec<u32>,
    rev_sources: Vec<NodeId>,
    rev_edge_ids: Vec<EdgeId>,
    probs: Vec<f64>,
    labels: Option<Vec<String>>,
    meta: GraphMeta,
}

impl Graph {
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.fwd_targets.len()
    }

    pub fn meta(&self) -> &GraphMeta {
        &self.meta
    }

    /// Activation probability of edge `e`.
    #[inline]
    pub fn prob(&self, e: EdgeId) -> f64 {
        self.probs[e as usize]
    }

    /// `(source, target)` of edge `e`.
    #[inline]
    pub fn endpoints(&self, e: EdgeId) -> (NodeId, NodeId) {
        (self.fwd_sources[e as usize], self.fwd_targets[e as usize])
    }

    /// Out-edges of `u` as `(edge id, target)`.
    #[inline]
    pub fn out_edges(&self, u: NodeId) -> impl Iterator<Item = (EdgeId, NodeId)> + '_ {
        let lo = self.fwd_offsets[u as usize] as usize;
        let hi = self.fwd_offsets[u as usize + 1] as usize;
        (lo..hi).map(move |e| (e as EdgeId, self.fwd_targets[e]))
    }

    /// In-edges of `v` as `(edge id, source)`.
    #[inline]
    pub fn in_edges(&self, v: NodeId) -> impl Iterator<Item = (EdgeId, NodeId)> + '_ {
        let lo = self.rev_offsets[v as usize] as usize;
        let hi = self.rev_offsets[v as usize + 1] as usize;
        (lo..hi).map(move |i| (self.rev_edge_ids[i], self.rev_sources[i]))
    }

    pub fn out_degree(&self, u: NodeId) -> usize {
        (self.fwd_offsets[u as usize + 1] - self.fwd_offsets[u as usize]) as usize
    }

    pub fn in_degree(&self, v: NodeId) -> usize {
        (self.rev_offsets[v as usize + 1] - self.rev_offsets[v as usize]) as usize
    }

    /// Original label of a node (its dense id rendered as text when the graph
    /// was built programmatically).
    pub fn label(&self, u: NodeId) -> String {
        match &self.labels {
            Some(ls) => ls[u as usize].clone(),
            None => u.to_string(),
        }
    }

    /// Dense id for an original label, if the graph carries labels.
    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        let ls = self.labels.as_ref()?;
        ls.iter().position(|l| l == label).map(|i| i as NodeId)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Parse a whitespace-separated edge list. Lines are `u v` or `u v w`
    /// with `w > 0`; `#` starts a comment. Endpoint tokens are arbitrary
    /// labels and are assigned dense ids in first-seen order. Self-loops are
    /// dropped; duplicate edges are merged with their weights summed. The
    /// explicit-weights model requires the weight column on every edge.
    pub fn from_edge_list_str(text: &str, model: ProbModel) -> Result<Graph, GraphError> {
        let mut ids: HashMap<String, NodeId> = HashMap::new();
        let mut labels: Vec<String> = Vec::new();
        let intern = |tok: &str, labels: &mut Vec<String>, ids: &mut HashMap<String, NodeId>| {
            *ids.entry(tok.to_string()).or_insert_with(|| {
                labels.push(tok.to_string());
                (labels.len() - 1) as NodeId
            })
        };
        let mut edges: Vec<(NodeId, NodeId, f64)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            if toks.len() > 3 {
                return Err(GraphError::Parse {
                    line: line_no,
                    msg: format!("expected `u v` or `u v w`, got {} fields", toks.len()),
                });
            }
            if toks.len() < 2 {
                return Err(GraphError::Parse { line: line_no, msg: "missing target node".into() });
            }
            let w = if toks.len() == 3 {
                let w: f64 = toks[2].parse().map_err(|_| GraphError::Parse {
                    line: line_no,
                    msg: format!("bad weight `{}`", toks[2]),
                })?;
                if !(w > 0.0) || !w.is_finite() {
                    return Err(GraphError::Parse {
                        line: line_no,
                        msg: format!("weight must be positive and finite, got {w}"),
                    });
                }
                w
            } else {
                if matches!(model, ProbModel::ExplicitWeights) {
                    return Err(GraphError::Parse {
                        line: line_no,
                        msg: "explicit-weights model requires a weight column".into(),
                    });
                }
                1.0
            };
            let u = intern(toks[0], &mut labels, &mut ids);
            let v = intern(toks[1], &mut labels, &mut ids);
            if u == v {
                continue; // self-loop
            }
            edges.push((u, v, w));
        }
        if labels.is_empty() {
            return Err(GraphError::EmptyInput);
        }
        let n = labels.len();
        Self::build(n, edges, model, Some(labels), None)
    }

    /// Build from unit-weight edges (mainly for tests and generators).
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)], model: ProbModel) -> Result<Graph, GraphError> {
        let weighted: Vec<(NodeId, NodeId, f64)> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        Self::from_weighted_edges(n, &weighted, model)
    }

    /// Build from weighted edges. Self-loops are dropped and duplicates merged
    /// exactly as in the text loader.
    pub fn from_weighted_edges(
        n: usize,
        edges: &[(NodeId, NodeId, f64)],
        model: ProbModel,
    ) -> Result<Graph, GraphError> {
        for &(u, v, w) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(GraphError::BadParam(format!("edge ({u}, {v}) outside 0..{n}")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(GraphError::BadParam(format!("weight must be positive and finite, got {w}")));
            }
        }
        let cleaned: Vec<(NodeId, NodeId, f64)> =
            edges.iter().copied().filter(|&(u, v, _)| u != v).collect();
        Self::build(n, cleaned, model, None, None)
    }

    fn build(
        n: usize,
        mut edges: Vec<(NodeId, NodeId, f64)>,
        model: ProbModel,
        labels: Option<Vec<String>>,
        generator: Option<String>,
    ) -> Result<Graph, GraphError> {
        if n == 0 {
            return Err(GraphError::BadParam("graph needs at least one node".into()));
        }
        if let ProbModel::Uniform(p) = model {
            if !(p > 0.0 && p <= 1.0) {
                return Err(GraphError::BadProbability(p));
            }
        }

        // Merge duplicates: sort by (source, target), sum weights. Sorting also
        // fixes the edge-id order, so identical inputs give identical graphs.
        edges.sort_by_key(|&(u, v, _)| (u, v));
        let mut merged: Vec<(NodeId, NodeId, f64)> = Vec::with_capacity(edges.len());
        for (u, v, w) in edges {
            match merged.last_mut() {
                Some(last) if last.0 == u && last.1 == v => last.2 += w,
                _ => merged.push((u, v, w)),
            }
        }
        let m = merged.len();

        let mut fwd_offsets = vec![0u32; n + 1];
        for &(u, _, _) in &merged {
            fwd_offsets[u as usize + 1] += 1;
        }
        for i in 0..n {
            fwd_offsets[i + 1] += fwd_offsets[i];
        }
        let fwd_sources: Vec<NodeId> = merged.iter().map(|e| e.0).collect();
        let fwd_targets: Vec<NodeId> = merged.iter().map(|e| e.1).collect();

        // Reverse CSR by counting sort on the target; edge ids stay the
        // forward ids so both views observe the same edge state.
        let mut indeg = vec![0u32; n];
        for &v in &fwd_targets {
            indeg[v as usize] += 1;
        }
        let mut rev_offsets = vec![0u32; n + 1];
        for v in 0..n {
            rev_offsets[v + 1] = rev_offsets[v] + indeg[v];
        }
        let mut cursor = rev_offsets.clone();
        let mut rev_sources = vec![0 as NodeId; m];
        let mut rev_edge_ids = vec![0 as EdgeId; m];
        for (e, &(u, v, _)) in merged.iter().enumerate() {
            let slot = cursor[v as usize] as usize;
            rev_sources[slot] = u;
            rev_edge_ids[slot] = e as EdgeId;
            cursor[v as usize] += 1;
        }

        let mut normalizer = None;
        let probs: Vec<f64> = match model {
            ProbModel::WeightedCascade => merged
                .iter()
                .map(|&(_, v, _)| 1.0 / indeg[v as usize] as f64)
                .collect(),
            ProbModel::Uniform(p) => vec![p; m],
            ProbModel::ExplicitWeights => {
                let max_w = merged.iter().map(|e| e.2).fold(0.0f64, f64::max);
                normalizer = Some(max_w);
                merged.iter().map(|e| (e.2 / max_w).clamp(0.0, 1.0)).collect()
            }
        };

        let meta = GraphMeta {
            nodes: n,
            edges: m,
            prob_model: model.describe(),
            normalizer,
            generator,
        };
        Ok(Graph {
            n,
            fwd_offsets,
            fwd_targets,
            fwd_sources,
            rev_offsets,
            rev_sources,
            rev_edge_ids,
            probs,
            labels,
            meta,
        })
    }

    /// Replace every edge probability (test hook; lengths must match).
    pub fn with_probs(mut self, probs: Vec<f64>) -> Graph {
        assert_eq!(probs.len(), self.edge_count());
        self.probs = probs;
        self
    }

    /// Rebuild a graph from serialized parts: deduplicated edges with their
    /// resolved probabilities plus the original metadata. Edge ids are
    /// reassigned in canonical (source, target) order, so parts written in
    /// id order round-trip exactly.
    pub fn from_parts(
        n: usize,
        edges: &[(NodeId, NodeId)],
        probs: &[f64],
        labels: Option<Vec<String>>,
        meta: GraphMeta,
    ) -> Result<Graph, GraphError> {
        if edges.len() != probs.len() {
            return Err(GraphError::BadParam(format!(
                "{} edges but {} probabilities",
                edges.len(),
                probs.len()
            )));
        }
        for &p in probs {
            if !(p > 0.0 && p <= 1.0) {
                return Err(GraphError::BadProbability(p));
            }
        }
        let mut pairs: Vec<((NodeId, NodeId), f64)> =
            edges.iter().copied().zip(probs.iter().copied()).collect();
        pairs.sort_by_key(|&(uv, _)| uv);
        let flat: Vec<(NodeId, NodeId)> = pairs.iter().map(|&(uv, _)| uv).collect();
        let mut g = Self::from_edges(n, &flat, ProbModel::Uniform(1.0))?;
        if g.edge_count() != pairs.len() {
            return Err(GraphError::BadParam("duplicate or self-loop edges in parts".into()));
        }
        g.probs = pairs.into_iter().map(|(_, p)| p).collect();
        g.labels = labels;
        g.meta = meta;
        Ok(g)
    }
}

/// Directed path `v_1 -> v_2 -> ... -> v_{2N+1}` with every edge probability
/// `1 - 1/N`. Node `v_i` has dense id `i - 1`. Requires `big_n >= 2`.
pub fn generate_line_graph(big_n: u32) -> Result<Graph, GraphError> {
    if big_n < 2 {
        return Err(GraphError::BadParam(format!("line graph needs N >= 2, got {big_n}")));
    }
    let n = (2 * big_n + 1) as usize;
    let p = 1.0 - 1.0 / big_n as f64;
    let edges: Vec<(NodeId, NodeId)> = (0..n as u32 - 1).map(|i| (i, i + 1)).collect();
    let mut g = Graph::from_edges(n, &edges, ProbModel::Uniform(p))?;
    g.meta.generator = Some(format!("line(N={big_n})"));
    Ok(g)
}

/// Random directed graph whose out-degree sequence follows a truncated power
/// law with the given exponent, scaled so the mean out-degree is close to
/// `avg_degree`. Targets are sampled uniformly without replacement. Edge
/// probabilities use the weighted-cascade model. Deterministic in `seed`.
pub fn generate_power_law(
    n: usize,
    exponent: f64,
    avg_degree: f64,
    seed: u64,
) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::BadParam(format!("power-law graph needs n >= 2, got {n}")));
    }
    if exponent <= 1.0 {
        return Err(GraphError::BadParam(format!("exponent must exceed 1, got {exponent}")));
    }
    if !(avg_degree > 0.0) || avg_degree > (n - 1) as f64 {
        return Err(GraphError::BadParam(format!("avg_degree {avg_degree} outside (0, n-1]")));
    }
    let mut rng = StreamKey::new(seed).rng();

    // Pareto draws with density ~ x^-exponent, truncated at n-1, then scaled
    // so the sample mean hits avg_degree.
    let alpha = exponent - 1.0;
    let cap = (n - 1) as f64;
    let raw: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            u.powf(-1.0 / alpha).min(cap)
        })
        .collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    let scale = avg_degree / mean;

    let mut pool: Vec<NodeId> = (0..n as NodeId).collect();
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    for (u, &x) in raw.iter().enumerate() {
        let d = ((x * scale).round() as usize).min(n - 1);
        // Partial Fisher-Yates over the pool; skip u itself, drawing one
        // extra position when it shows up in the prefix.
        let mut taken = 0;
        let mut i = 0;
        while taken < d && i < n {
            let j = rng.gen_range(i..n);
            pool.swap(i, j);
            if pool[i] != u as NodeId {
                edges.push((u as NodeId, pool[i]));
                taken += 1;
            }
            i += 1;
        }
    }
    let mut g = Graph::from_edges(n, &edges, ProbModel::WeightedCascade)?;
    g.meta.generator = Some(format!("power_law(n={n}, exponent={exponent}, avg_degree={avg_degree}, seed={seed})"));
    Ok(g)
}
