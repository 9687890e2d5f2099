//! Reverse-reachable sampling against a partially observed cascade.
//!
//! A time-bounded RR-set is built by reverse BFS from a uniformly random
//! root, flipping unobserved edges with their activation probability and
//! honouring edges the status has already fixed. Reaching any active node
//! (including picking one as the root) collapses the sample to a sentinel
//! that every seed set covers: those roots get activated no matter what is
//! seeded. The fraction of covered samples, scaled by `n`, estimates the
//! expected final active count for a candidate seed set, and a greedy
//! maximum-coverage pass over a batch of samples picks seeds.

use fixedbitset::FixedBitSet;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion::{EdgeState, Status};
use crate::graph::{Graph, NodeId};
use crate::rng::{purpose, StreamKey};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RrSet {
    /// The root is activated by every seed set (an active node was reached).
    AlwaysCovered,
    /// Nodes whose seeding would activate the root in time; includes the root.
    Nodes(Vec<NodeId>),
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RrError {
    #[error("empty collection")]
    Empty,
}

/// Reverse BFS of at most `t` hops from a random root. Each edge is examined
/// at most once, so one flip per unobserved edge decides its state for the
/// whole sample.
pub fn generate_rr_set<R: Rng>(graph: &Graph, status: &Status, t: u32, rng: &mut R) -> RrSet {
    let n = graph.node_count();
    let root = rng.gen_range(0..n as NodeId);
    if status.is_active(root) {
        return RrSet::AlwaysCovered;
    }
    let mut visited = FixedBitSet::with_capacity(n);
    visited.insert(root as usize);
    let mut nodes = vec![root];
    let mut level = vec![root];
    for _ in 0..t {
        if level.is_empty() {
            break;
        }
        let mut next = Vec::new();
        for &w in &level {
            for (e, u) in graph.in_edges(w) {
                match status.edge_state(e) {
                    EdgeState::Dead => continue,
                    // A live edge has an active source: the root is reachable
                    // from the active set as things stand.
                    EdgeState::Live => return RrSet::AlwaysCovered,
                    EdgeState::Unobserved => {
                        if visited.contains(u as usize) {
                            continue;
                        }
                        if !rng.gen_bool(graph.prob(e)) {
                            continue;
                        }
                        if status.is_active(u) {
                            return RrSet::AlwaysCovered;
                        }
                        visited.insert(u as usize);
                        nodes.push(u);
                        next.push(u);
                    }
                }
            }
        }
        level = next;
    }
    RrSet::Nodes(nodes)
}

/// A batch of RR-sets sampled from one `(status, t)` pair, with an inverted
/// node-to-sample index for coverage queries.
#[derive(Clone, Debug)]
pub struct RrCollection {
    n: usize,
    t: u32,
    active: FixedBitSet,
    total: usize,
    always_covered: usize,
    finite: Vec<Vec<NodeId>>,
    covers: Vec<Vec<u32>>,
}

impl RrCollection {
    pub fn new(graph: &Graph, status: &Status, t: u32) -> RrCollection {
        let n = graph.node_count();
        let mut active = FixedBitSet::with_capacity(n);
        for u in status.active_nodes() {
            active.insert(u as usize);
        }
        RrCollection { n, t, active, total: 0, always_covered: 0, finite: Vec::new(), covers: vec![Vec::new(); n] }
    }

    /// Collection over a synthetic universe with no active nodes; test hook
    /// for exercising coverage logic directly.
    pub fn synthetic(n: usize, sets: Vec<RrSet>) -> RrCollection {
        let mut coll = RrCollection {
            n,
            t: 1,
            active: FixedBitSet::with_capacity(n),
            total: 0,
            always_covered: 0,
            finite: Vec::new(),
            covers: vec![Vec::new(); n],
        };
        for s in sets {
            coll.push(s);
        }
        coll
    }

    pub fn push(&mut self, set: RrSet) {
        self.total += 1;
        match set {
            RrSet::AlwaysCovered => self.always_covered += 1,
            RrSet::Nodes(nodes) => {
                let idx = self.finite.len() as u32;
                for &u in &nodes {
                    self.covers[u as usize].push(idx);
                }
                self.finite.push(nodes);
            }
        }
    }

    /// Sample more RR-sets until the collection holds `count`. Sample `i` is
    /// keyed by `(key, RR_SET, i)`, so growing in batches, in parallel, or
    /// one by one yields the same collection.
    pub fn extend_to(&mut self, graph: &Graph, status: &Status, count: usize, key: StreamKey) {
        if count <= self.total {
            return;
        }
        let fresh: Vec<RrSet> = (self.total..count)
            .into_par_iter()
            .map(|i| {
                let mut rng = key.child(purpose::RR_SET).child(i as u64).rng();
                generate_rr_set(graph, status, self.t, &mut rng)
            })
            .collect();
        for s in fresh {
            self.push(s);
        }
    }

    pub fn generate(graph: &Graph, status: &Status, t: u32, count: usize, key: StreamKey) -> RrCollection {
        let mut coll = RrCollection::new(graph, status, t);
        coll.extend_to(graph, status, count, key);
        coll
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn always_covered_count(&self) -> usize {
        self.always_covered
    }

    pub fn horizon(&self) -> u32 {
        self.t
    }

    /// Number of samples covered by `seeds` (sentinels count for any seeds,
    /// even none).
    pub fn covered_by(&self, seeds: &[NodeId]) -> usize {
        let mut hit = FixedBitSet::with_capacity(self.finite.len());
        for &s in seeds {
            for &idx in &self.covers[s as usize] {
                hit.insert(idx as usize);
            }
        }
        self.always_covered + hit.count_ones(..)
    }
}

/// Coverage-scaled estimate of the expected final active count when `seeds`
/// are added on top of the collection's originating status.
pub fn estimate_g_rr(coll: &RrCollection, seeds: &[NodeId], n: usize) -> Result<f64, RrError> {
    if coll.is_empty() {
        return Err(RrError::Empty);
    }
    Ok(n as f64 * coll.covered_by(seeds) as f64 / coll.total as f64)
}

/// Greedy maximum coverage, also reporting how many samples the chosen set
/// covers. Ties go to the smallest node id; active nodes are never selected.
/// Once every remaining sample is covered the smallest-id leftovers fill the
/// quota, so exactly `min(k, inactive)` nodes come back.
pub fn greedy_max_coverage_with_count(coll: &RrCollection, k: u32) -> (Vec<NodeId>, u64) {
    let mut gain: Vec<u64> = vec![0; coll.n];
    for (u, ids) in coll.covers.iter().enumerate() {
        gain[u] = ids.len() as u64;
    }
    let mut chosen: Vec<NodeId> = Vec::new();
    let mut picked = FixedBitSet::with_capacity(coll.n);
    let mut set_covered = FixedBitSet::with_capacity(coll.finite.len());
    let mut covered: u64 = coll.always_covered as u64;
    for _ in 0..k {
        let mut best: Option<(u64, usize)> = None;
        for u in 0..coll.n {
            if picked.contains(u) || coll.active.contains(u) {
                continue;
            }
            match best {
                Some((g, _)) if gain[u] <= g => {}
                _ => best = Some((gain[u], u)),
            }
        }
        let Some((g, u)) = best else { break };
        picked.insert(u);
        chosen.push(u as NodeId);
        covered += g;
        for &idx in &coll.covers[u] {
            if !set_covered.contains(idx as usize) {
                set_covered.insert(idx as usize);
                for &w in &coll.finite[idx as usize] {
                    gain[w as usize] -= 1;
                }
            }
        }
    }
    (chosen, covered)
}

pub fn greedy_max_coverage(coll: &RrCollection, k: u32) -> Vec<NodeId> {
    greedy_max_coverage_with_count(coll, k).0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorMode {
    /// Sample a fixed number of RR-sets per selection.
    Fixed,
    /// Two-phase doubling search: grow the collection until the greedy
    /// solution's estimated coverage certifies a lower bound on the optimum,
    /// then sample the count that bound implies.
    Adaptive,
}

/// How `select_seeds` sizes its RR-set collections.
///
/// `epsilon` is the relative error target and `confidence` the exponent in
/// the `1 - 1/n^confidence` success probability; both only matter in
/// adaptive mode. `count` is the fixed-mode sample count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectorConfig {
    pub mode: SelectorMode,
    pub count: u32,
    pub epsilon: f64,
    pub confidence: f64,
}

impl SelectorConfig {
    pub fn fixed(count: u32) -> SelectorConfig {
        SelectorConfig { mode: SelectorMode::Fixed, count, epsilon: 0.5, confidence: 1.0 }
    }

    pub fn adaptive(epsilon: f64, confidence: f64) -> SelectorConfig {
        SelectorConfig { mode: SelectorMode::Adaptive, count: 0, epsilon, confidence }
    }
}

impl Default for SelectorConfig {
    fn default() -> Self {
        SelectorConfig::adaptive(0.5, 1.0)
    }
}

fn ln_choose(n: usize, k: u32) -> f64 {
    let k = (k as usize).min(n);
    (1..=k).map(|i| (((n - k + i) as f64) / i as f64).ln()).sum()
}

/// Adaptive sample-count search. Phase one halves a guess `x` for the
/// optimum until the greedy estimate certifies `LB >= OPT / (1 + eps')`;
/// phase two sizes the final collection so greedy coverage concentrates
/// within `epsilon` relative error with probability `1 - 1/n^confidence`.
fn adaptive_select(
    graph: &Graph,
    status: &Status,
    t: u32,
    k: u32,
    cfg: &SelectorConfig,
    key: StreamKey,
) -> (Vec<NodeId>, usize) {
    let n = graph.node_count();
    let nf = n as f64;
    let ln_n = nf.ln();
    // Split the failure budget between the two phases.
    let l_eff = cfg.confidence + 2f64.ln() / ln_n;
    let lcnk = ln_choose(n, k);
    let eps = cfg.epsilon;
    let eps_p = (2f64).sqrt() * eps;
    let lambda_p = (2.0 + 2.0 * eps_p / 3.0) * (lcnk + l_eff * ln_n + nf.log2().max(1.0).ln()) * nf
        / (eps_p * eps_p);

    let mut coll = RrCollection::new(graph, status, t);
    let mut lb = 1.0f64;
    let max_i = (nf.log2().ceil() as u32).max(1);
    for i in 1..max_i {
        let x = nf / 2f64.powi(i as i32);
        let theta_i = (lambda_p / x).ceil() as usize;
        coll.extend_to(graph, status, theta_i, key);
        let (_, covered) = greedy_max_coverage_with_count(&coll, k);
        let est = nf * covered as f64 / coll.len() as f64;
        if est >= (1.0 + eps_p) * x {
            lb = est / (1.0 + eps_p);
            break;
        }
    }

    let one_minus_inv_e = 1.0 - 1.0 / std::f64::consts::E;
    let alpha = (l_eff * ln_n + 2f64.ln()).sqrt();
    let beta = (one_minus_inv_e * (lcnk + l_eff * ln_n + 2f64.ln())).sqrt();
    let lambda_star = 2.0 * nf * (one_minus_inv_e * alpha + beta).powi(2) / (eps * eps);
    let theta = (lambda_star / lb).ceil() as usize;
    coll.extend_to(graph, status, theta.max(1), key);
    let (seeds, _) = greedy_max_coverage_with_count(&coll, k);
    (seeds, coll.len())
}

/// Pick up to `k` seeds for `status` with `t` rounds to go, by greedy
/// coverage over RR-sets. Returns `(seeds, samples used)`; order is the
/// greedy selection order. Requires `t >= 1`.
pub fn select_seeds_with_stats(
    graph: &Graph,
    status: &Status,
    t: u32,
    k: u32,
    cfg: &SelectorConfig,
    key: StreamKey,
) -> (Vec<NodeId>, usize) {
    debug_assert!(t >= 1, "selection needs at least one remaining round");
    let inactive = graph.node_count() - status.active_count();
    let k_eff = (k as usize).min(inactive) as u32;
    if k_eff == 0 {
        return (Vec::new(), 0);
    }
    let key = key.child(purpose::SELECTOR);
    match cfg.mode {
        SelectorMode::Fixed => {
            let count = cfg.count.max(1) as usize;
            let coll = RrCollection::generate(graph, status, t, count, key);
            (greedy_max_coverage(&coll, k_eff), count)
        }
        SelectorMode::Adaptive => adaptive_select(graph, status, t, k_eff, cfg, key),
    }
}

/// [`select_seeds_with_stats`] without the sample count.
pub fn select_seeds(
    graph: &Graph,
    status: &Status,
    t: u32,
    k: u32,
    cfg: &SelectorConfig,
    key: StreamKey,
) -> Vec<NodeId> {
    select_seeds_with_stats(graph, status, t, k, cfg, key).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ProbModel;

    #[test]
    fn active_root_is_sentinel() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)], ProbModel::Uniform(0.5)).unwrap();
        let mut st = Status::empty(&g);
        st.activate(1);
        let mut hits = 0;
        for s in 0..200 {
            let mut rng = StreamKey::new(s).rng();
            if let RrSet::AlwaysCovered = generate_rr_set(&g, &st, 1, &mut rng) {
                hits += 1;
            }
        }
        // root 1 always collapses; root 2 does whenever 1 -> 2 flips live
        assert!(hits > 60, "hits = {hits}");
    }

    #[test]
    fn depth_is_capped() {
        // 2 -> 1 -> 0 with certain edges: from root 0 at t = 1 only node 1 joins.
        let g = Graph::from_edges(3, &[(2, 1), (1, 0)], ProbModel::Uniform(1.0)).unwrap();
        let st = Status::empty(&g);
        for s in 0..50 {
            let mut rng = StreamKey::new(s).rng();
            let rr = generate_rr_set(&g, &st, 1, &mut rng);
            if let RrSet::Nodes(nodes) = rr {
                if nodes[0] == 0 {
                    let mut sorted = nodes.clone();
                    sorted.sort_unstable();
                    assert_eq!(sorted, vec![0, 1]);
                }
            }
        }
    }

    #[test]
    fn dead_edges_block_reverse_traversal() {
        let g = Graph::from_edges(2, &[(0, 1)], ProbModel::Uniform(1.0)).unwrap();
        let mut st = Status::empty(&g);
        st.activate(0);
        st.observe(0, false);
        for s in 0..20 {
            let mut rng = StreamKey::new(s).rng();
            match generate_rr_set(&g, &st, 3, &mut rng) {
                RrSet::AlwaysCovered => {} // root was node 0
                RrSet::Nodes(nodes) => assert_eq!(nodes, vec![1]),
            }
        }
    }

    #[test]
    fn sentinel_counts_for_empty_seed_set() {
        let coll = RrCollection::synthetic(4, vec![RrSet::AlwaysCovered, RrSet::Nodes(vec![2])]);
        assert_eq!(coll.covered_by(&[]), 1);
        assert_eq!(coll.covered_by(&[2]), 2);
        assert_eq!(estimate_g_rr(&coll, &[], 4).unwrap(), 2.0);
        let empty = RrCollection::synthetic(4, vec![]);
        assert_eq!(estimate_g_rr(&empty, &[], 4), Err(RrError::Empty));
    }

    #[test]
    fn greedy_prefers_coverage_then_small_ids() {
        // a = 1 covers 3 sets, b = 2 covers 2 disjoint ones.
        let sets = vec![
            RrSet::Nodes(vec![1, 0]),
            RrSet::Nodes(vec![1]),
            RrSet::Nodes(vec![1, 3]),
            RrSet::Nodes(vec![2]),
            RrSet::Nodes(vec![2, 3]),
        ];
        let coll = RrCollection::synthetic(5, sets);
        assert_eq!(greedy_max_coverage(&coll, 2), vec![1, 2]);
        // zero-gain padding: all five samples covered after {1, 2}
        assert_eq!(greedy_max_coverage(&coll, 4), vec![1, 2, 0, 3]);
    }

    #[test]
    fn greedy_breaks_ties_low() {
        let sets = vec![RrSet::Nodes(vec![3]), RrSet::Nodes(vec![1])];
        let coll = RrCollection::synthetic(5, sets);
        assert_eq!(greedy_max_coverage(&coll, 1), vec![1]);
    }

    #[test]
    fn selection_skips_active_nodes_and_caps_at_inactive() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)], ProbModel::Uniform(0.9)).unwrap();
        let mut st = Status::empty(&g);
        st.activate(0);
        st.activate(2);
        let cfg = SelectorConfig::fixed(500);
        let seeds = select_seeds(&g, &st, 2, 5, &cfg, StreamKey::new(3));
        assert_eq!(seeds, vec![1]);
        // saturated status: nothing to pick
        st.activate(1);
        assert!(select_seeds(&g, &st, 2, 5, &cfg, StreamKey::new(3)).is_empty());
    }

    #[test]
    fn extension_is_deterministic_and_batch_invariant() {
        let g = crate::graph::generate_power_law(40, 2.5, 3.0, 5).unwrap();
        let st = Status::empty(&g);
        let key = StreamKey::new(9);
        let a = RrCollection::generate(&g, &st, 2, 300, key);
        let mut b = RrCollection::generate(&g, &st, 2, 120, key);
        b.extend_to(&g, &st, 300, key);
        assert_eq!(a.len(), b.len());
        assert_eq!(a.always_covered_count(), b.always_covered_count());
        assert_eq!(a.finite, b.finite);
    }

    #[test]
    fn adaptive_mode_runs_on_small_graphs() {
        let g = crate::graph::generate_power_law(30, 2.5, 3.0, 17).unwrap();
        let st = Status::empty(&g);
        let cfg = SelectorConfig::adaptive(0.5, 1.0);
        let (seeds, used) = select_seeds_with_stats(&g, &st, 2, 2, &cfg, StreamKey::new(21));
        assert_eq!(seeds.len(), 2);
        assert!(used > 0);
    }

    #[test]
    fn coverage_estimate_tracks_forward_estimate() {
        // sanity: RR estimate of g({seed}) close to the forward estimate
        let g = crate::graph::generate_power_law(60, 2.5, 4.0, 23).unwrap();
        let st = Status::empty(&g);
        let coll = RrCollection::generate(&g, &st, 3, 60_000, StreamKey::new(4));
        let rr = estimate_g_rr(&coll, &[0], 60).unwrap();
        let fwd = crate::diffusion::estimate_g_forward(&g, &st, &[0], 3, 60_000, StreamKey::new(5));
        assert!((rr - fwd).abs() < 0.25, "rr = {rr}, fwd = {fwd}");
    }
}
