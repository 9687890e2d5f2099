//! Brute-force ground truth at desk scale.
//!
//! Everything here trades speed for certainty: expected spreads by
//! enumerating all edge realizations, optimal policies by expectimax or
//! exhaustive subset search, plus the closed forms for the seeded-line
//! family. Production estimators are tested against these oracles.

use itertools::Itertools;
use rayon::prelude::*;
use std::collections::HashMap;

use crate::diffusion::{EdgeState, Status};
use crate::graph::{generate_line_graph, EdgeId, Graph, NodeId};
use crate::policy::{PolicyDecision, PolicyState, SeedingPolicy};
use crate::rng::StreamKey;
use crate::runner::{run_seeding_process, ProcessConfig};

/// Enumeration bound: at most this many undetermined edges per expectation.
pub const MAX_ENUM_EDGES: usize = 22;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("enumeration needs {needed} undetermined edges, cap is {cap}")]
    TooManyEdges { needed: usize, cap: usize },
    #[error("instance too large for exact search: {0}")]
    TooLarge(String),
}

/// Compensated accumulator; enumeration sums many tiny probabilities.
#[derive(Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}

const INF: u16 = u16::MAX;

/// Hop distances when every non-dead edge is traversable (the most
/// permissive realization), capped at `cap`.
fn optimistic_dists(graph: &Graph, status: &Status, sources: &[NodeId], cap: u32) -> Vec<u16> {
    let mut dist = vec![INF; graph.node_count()];
    let mut level: Vec<NodeId> = Vec::new();
    for &s in sources {
        if dist[s as usize] != 0 {
            dist[s as usize] = 0;
            level.push(s);
        }
    }
    for d in 1..=cap.min(u16::MAX as u32 - 1) as u16 {
        if level.is_empty() {
            break;
        }
        let mut next = Vec::new();
        for &u in &level {
            for (e, v) in graph.out_edges(u) {
                if dist[v as usize] == INF && status.edge_state(e) != EdgeState::Dead {
                    dist[v as usize] = d;
                    next.push(v);
                }
            }
        }
        level = next;
    }
    dist
}

/// Unobserved edges that can influence a `t`-round spread from `sources`:
/// the source end must be reachable early enough to attempt in time, and
/// edges into the sources themselves never matter. Everything else
/// marginalizes out of the expectation.
fn relevant_unobserved(graph: &Graph, status: &Status, sources: &[NodeId], t: u32) -> Vec<EdgeId> {
    relevant_unobserved_for(graph, status, sources, sources, t)
}

/// As above with distinct roles: `reach` seeds the optimistic distances,
/// `absorbing` lists the nodes whose incoming edges never matter (distance-0
/// sources only; a delayed candidate must stay reachable).
fn relevant_unobserved_for(
    graph: &Graph,
    status: &Status,
    reach: &[NodeId],
    absorbing: &[NodeId],
    t: u32,
) -> Vec<EdgeId> {
    if t == 0 {
        return Vec::new();
    }
    let dist = optimistic_dists(graph, status, reach, t - 1);
    let mut absorbed = vec![false; graph.node_count()];
    for &s in absorbing {
        absorbed[s as usize] = true;
    }
    let mut rel = Vec::new();
    for e in 0..graph.edge_count() as EdgeId {
        if status.edge_state(e) != EdgeState::Unobserved {
            continue;
        }
        let (u, v) = graph.endpoints(e);
        if dist[u as usize] as u32 <= t - 1 && !absorbed[v as usize] {
            rel.push(e);
        }
    }
    rel
}

/// One realization's distances: live edges open, dead closed, relevant
/// unobserved edges open per `mask`, irrelevant unobserved edges closed
/// (they cannot change the counted region).
fn masked_dists(
    graph: &Graph,
    status: &Status,
    sources: &[NodeId],
    cap: u32,
    rel_pos: &[u8],
    mask: u64,
) -> Vec<u16> {
    let mut dist = vec![INF; graph.node_count()];
    let mut level: Vec<NodeId> = Vec::new();
    for &s in sources {
        if dist[s as usize] != 0 {
            dist[s as usize] = 0;
            level.push(s);
        }
    }
    for d in 1..=cap.min(u16::MAX as u32 - 1) as u16 {
        if level.is_empty() {
            break;
        }
        let mut next = Vec::new();
        for &u in &level {
            for (e, v) in graph.out_edges(u) {
                if dist[v as usize] != INF {
                    continue;
                }
                let open = match status.edge_state(e) {
                    EdgeState::Live => true,
                    EdgeState::Dead => false,
                    EdgeState::Unobserved => {
                        let p = rel_pos[e as usize];
                        p != u8::MAX && mask >> p & 1 == 1
                    }
                };
                if open {
                    dist[v as usize] = d;
                    next.push(v);
                }
            }
        }
        level = next;
    }
    dist
}

fn mask_prob(graph: &Graph, rel: &[EdgeId], mask: u64) -> f64 {
    let mut p = 1.0;
    for (i, &e) in rel.iter().enumerate() {
        let pe = graph.prob(e);
        p *= if mask >> i & 1 == 1 { pe } else { 1.0 - pe };
    }
    p
}

fn rel_positions(graph: &Graph, rel: &[EdgeId]) -> Vec<u8> {
    let mut pos = vec![u8::MAX; graph.edge_count()];
    for (i, &e) in rel.iter().enumerate() {
        pos[e as usize] = i as u8;
    }
    pos
}

fn source_set(graph: &Graph, status: &Status, seeds: &[NodeId]) -> Vec<NodeId> {
    let mut seen = vec![false; graph.node_count()];
    let mut out = Vec::new();
    for s in status.active_nodes().chain(seeds.iter().copied()) {
        if !seen[s as usize] {
            seen[s as usize] = true;
            out.push(s);
        }
    }
    out
}

/// Exact expected active count `t` rounds after seeding `seeds` on `status`,
/// by enumerating every realization of the unobserved edges that can matter.
pub fn exact_g(graph: &Graph, status: &Status, seeds: &[NodeId], t: u32) -> Result<f64, OracleError> {
    let sources = source_set(graph, status, seeds);
    if t == 0 || sources.is_empty() {
        return Ok(sources.len() as f64);
    }
    let rel = relevant_unobserved(graph, status, &sources, t);
    if rel.len() > MAX_ENUM_EDGES {
        return Err(OracleError::TooManyEdges { needed: rel.len(), cap: MAX_ENUM_EDGES });
    }
    let pos = rel_positions(graph, &rel);
    let mut acc = Kahan::default();
    for mask in 0u64..1 << rel.len() {
        let dist = masked_dists(graph, status, &sources, t, &pos, mask);
        let count = dist.iter().filter(|&&d| (d as u32) <= t).count();
        acc.add(mask_prob(graph, &rel, mask) * count as f64);
    }
    Ok(acc.value())
}

/// Exact-g greedy selection: `k` rounds of argmax marginal gain over the
/// inactive nodes, smallest id on ties, padded with zero-gain nodes so the
/// returned set has min(k, #inactive) elements.
pub fn exact_gr(graph: &Graph, status: &Status, t: u32, k: u32) -> Result<Vec<NodeId>, OracleError> {
    let inactive: Vec<NodeId> =
        (0..graph.node_count() as NodeId).filter(|&v| !status.is_active(v)).collect();
    let k_eff = (k as usize).min(inactive.len());
    let mut chosen: Vec<NodeId> = Vec::with_capacity(k_eff);
    for _ in 0..k_eff {
        let mut best: Option<(NodeId, f64)> = None;
        for &v in &inactive {
            if chosen.contains(&v) {
                continue;
            }
            let mut trial = chosen.clone();
            trial.push(v);
            let val = exact_g(graph, status, &trial, t)?;
            // strict improvement beyond float noise keeps the smallest id
            if best.map_or(true, |(_, bv)| val > bv + 1e-9) {
                best = Some((v, val));
            }
        }
        chosen.push(best.expect("k_eff bounded by inactive count").0);
    }
    Ok(chosen)
}

/// All one-round outcomes from `status` (no new seeds) with probabilities:
/// every subset of the currently attempting edges comes up live.
fn one_round_outcomes(graph: &Graph, status: &Status) -> Result<Vec<(f64, Status)>, OracleError> {
    let attempts: Vec<EdgeId> = (0..graph.edge_count() as EdgeId)
        .filter(|&e| {
            let (u, v) = graph.endpoints(e);
            status.edge_state(e) == EdgeState::Unobserved
                && status.is_active(u)
                && !status.is_active(v)
        })
        .collect();
    if attempts.len() > MAX_ENUM_EDGES {
        return Err(OracleError::TooManyEdges { needed: attempts.len(), cap: MAX_ENUM_EDGES });
    }
    let mut out = Vec::with_capacity(1 << attempts.len());
    for mask in 0u64..1 << attempts.len() {
        let mut st = status.clone();
        let mut prob = 1.0;
        for (i, &e) in attempts.iter().enumerate() {
            let live = mask >> i & 1 == 1;
            let pe = graph.prob(e);
            prob *= if live { pe } else { 1.0 - pe };
            st.observe(e, live);
            if live {
                st.activate(graph.endpoints(e).1);
            }
        }
        out.push((prob, st));
    }
    Ok(out)
}

fn inactive_nodes(graph: &Graph, status: &Status) -> Vec<NodeId> {
    (0..graph.node_count() as NodeId).filter(|&v| !status.is_active(v)).collect()
}

/// Exact split value with an optimal second stage: commit the greedy `k1`
/// seeds now, observe one diffusion round, then place the remaining
/// `k - k1` seeds wherever an exhaustive search says they do best.
pub fn exact_beta(graph: &Graph, status: &Status, k: u32, t: u32, k1: u32) -> Result<f64, OracleError> {
    assert!(k1 <= k);
    assert!(t >= 1);
    let now = exact_gr(graph, status, t, k1)?;
    let mut committed = status.clone();
    for &s in &now {
        committed.activate(s);
    }
    let mut acc = Kahan::default();
    for (prob, u_star) in one_round_outcomes(graph, &committed)? {
        let pool = inactive_nodes(graph, &u_star);
        let size = ((k - k1) as usize).min(pool.len());
        let mut best = f64::NEG_INFINITY;
        for combo in pool.iter().copied().combinations(size) {
            best = best.max(exact_g(graph, &u_star, &combo, t - 1)?);
        }
        acc.add(prob * best);
    }
    Ok(acc.value())
}

/// Exact split value with a greedy second stage (the estimator's target):
/// both stages use exact-g greedy selection.
pub fn exact_beta_bar(graph: &Graph, status: &Status, t: u32, k: u32, k1: u32) -> Result<f64, OracleError> {
    assert!(k1 <= k);
    assert!(t >= 1);
    let now = exact_gr(graph, status, t, k1)?;
    let mut committed = status.clone();
    for &s in &now {
        committed.activate(s);
    }
    let mut acc = Kahan::default();
    for (prob, u_star) in one_round_outcomes(graph, &committed)? {
        let later = exact_gr(graph, &u_star, t - 1, k - k1)?;
        acc.add(prob * exact_g(graph, &u_star, &later, t - 1)?);
    }
    Ok(acc.value())
}

/// Exact split choice: argmax of [`exact_beta_bar`] over `k1 = 0..=k`, ties
/// toward committing more now. Returns the chosen split and all values.
pub fn sof_exact_decision(
    graph: &Graph,
    status: &Status,
    t: u32,
    k: u32,
) -> Result<(u32, Vec<f64>), OracleError> {
    let mut values = Vec::with_capacity(k as usize + 1);
    let mut best = (0u32, f64::NEG_INFINITY);
    for k1 in 0..=k {
        let b = exact_beta_bar(graph, status, t, k, k1)?;
        values.push(b);
        if b >= best.1 {
            best = (k1, b);
        }
    }
    Ok((best.0, values))
}

/// Exact delayed marginal of `v`: run the cascade from `active + s_i` for
/// `t` rounds, then seed `v` with `t_star` rounds left; expected extra
/// activations, enumerated over all realizations that can matter.
pub fn exact_h(
    graph: &Graph,
    status: &Status,
    s_i: &[NodeId],
    v: NodeId,
    t: u32,
    t_star: u32,
) -> Result<f64, OracleError> {
    let src = source_set(graph, status, s_i);
    let mut all = src.clone();
    if !all.contains(&v) {
        all.push(v);
    }
    // v is reachable by the first-stage cascade, so edges into it stay
    let rel = relevant_unobserved_for(graph, status, &all, &src, t + t_star);
    if rel.len() > MAX_ENUM_EDGES {
        return Err(OracleError::TooManyEdges { needed: rel.len(), cap: MAX_ENUM_EDGES });
    }
    let pos = rel_positions(graph, &rel);
    let mut acc = Kahan::default();
    for mask in 0u64..1 << rel.len() {
        let d_src = masked_dists(graph, status, &src, t + t_star, &pos, mask);
        let d_v = masked_dists(graph, status, &[v], t_star, &pos, mask);
        let mut value = 0u64;
        for w in 0..graph.node_count() {
            let ds = d_src[w] as u32;
            if ds <= t + t_star {
                if ds > t {
                    value += 1; // grows beyond the first stage
                }
            } else if d_v[w] as u32 <= t_star {
                value += 1; // reached by v alone
            }
        }
        acc.add(mask_prob(graph, &rel, mask) * value as f64);
    }
    Ok(acc.value())
}

/// Value of the best adaptive policy by expectimax: at every step choose the
/// seed subset (any size up to the remaining budget, empty allowed) that
/// maximizes the expectation over the round's attempt outcomes.
pub fn exact_optimal_adaptive(graph: &Graph, horizon: u32, budget: u32) -> Result<f64, OracleError> {
    let n = graph.node_count();
    let m = graph.edge_count();
    if n > 10 || m > 14 || horizon > 5 || budget > 3 {
        return Err(OracleError::TooLarge(format!(
            "adaptive search handles n <= 10, m <= 14, T <= 5, K <= 3; got n={n}, m={m}, T={horizon}, K={budget}"
        )));
    }
    let mut memo: HashMap<(u32, u32, u8, u8), f64> = HashMap::new();
    let st = Status::empty(graph);
    Ok(expectimax(graph, &st, horizon, budget, &mut memo)?)
}

/// Dead edges with inactive targets are the only observations that constrain
/// the future (a dead edge into an already active node changes nothing, and
/// a live edge's target is always active), so states agreeing on the active
/// set and that dead subset share a value.
fn canonical_key(graph: &Graph, status: &Status, t: u32, k: u32) -> (u32, u32, u8, u8) {
    let mut active = 0u32;
    for u in status.active_nodes() {
        active |= 1 << u;
    }
    let mut dead = 0u32;
    for e in 0..graph.edge_count() as EdgeId {
        if status.edge_state(e) == EdgeState::Dead && !status.is_active(graph.endpoints(e).1) {
            dead |= 1 << e;
        }
    }
    (active, dead, t as u8, k as u8)
}

fn expectimax(
    graph: &Graph,
    status: &Status,
    t: u32,
    k: u32,
    memo: &mut HashMap<(u32, u32, u8, u8), f64>,
) -> Result<f64, OracleError> {
    if t == 0 {
        return Ok(status.active_count() as f64);
    }
    if k == 0 && status.is_final(graph) {
        return Ok(status.active_count() as f64);
    }
    let key = canonical_key(graph, status, t, k);
    if let Some(&v) = memo.get(&key) {
        return Ok(v);
    }
    let pool = inactive_nodes(graph, status);
    let mut best = f64::NEG_INFINITY;
    for size in 0..=(k as usize).min(pool.len()) {
        for combo in pool.iter().copied().combinations(size) {
            let mut committed = status.clone();
            for &s in &combo {
                committed.activate(s);
            }
            let mut ev = Kahan::default();
            for (prob, next) in one_round_outcomes(graph, &committed)? {
                ev.add(prob * expectimax(graph, &next, t - 1, k - size as u32, memo)?);
            }
            best = best.max(ev.value());
        }
    }
    memo.insert(key, best);
    Ok(best)
}

/// Best fixed seed set: exhaustive search over all subsets of size up to
/// `budget`, seeded in round one. Returns the first maximizer in
/// (size, lexicographic) order and its value.
pub fn exact_optimal_nonadaptive(
    graph: &Graph,
    horizon: u32,
    budget: u32,
) -> Result<(Vec<NodeId>, f64), OracleError> {
    let nodes: Vec<NodeId> = (0..graph.node_count() as NodeId).collect();
    let empty = Status::empty(graph);
    let mut best_set: Vec<NodeId> = Vec::new();
    let mut best_val = 0.0f64;
    for size in 0..=(budget as usize).min(nodes.len()) {
        for combo in nodes.iter().copied().combinations(size) {
            let val = exact_g(graph, &empty, &combo, horizon)?;
            if val > best_val + 1e-9 {
                best_val = val;
                best_set = combo;
            }
        }
    }
    Ok((best_set, best_val))
}

/// Closed forms for the seeded-line family: a directed path on `2N + 1`
/// nodes with edge probability `p = 1 - 1/N`, horizon `2N`, budget 2.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct GapInstance {
    pub big_n: u32,
    pub p: f64,
    pub horizon: u32,
    pub budget: u32,
    /// Value of the watch-then-reseed adaptive policy.
    pub delta_ad: f64,
    /// Value of the best fixed seed pair.
    pub delta_nonad: f64,
    pub ratio: f64,
}

impl GapInstance {
    /// Expected spread of one fresh seed on a long path within `t` rounds.
    pub fn s(&self, t: u32) -> f64 {
        let p = self.p;
        (1.0 - p.powi(t as i32)) / (1.0 - p) + p.powi(t as i32)
    }
}

pub fn gap_closed_forms(big_n: u32) -> GapInstance {
    assert!(big_n >= 2, "the line family needs N >= 2");
    let nf = big_n as f64;
    let q = 1.0 - 1.0 / nf;
    let delta_ad = 2.0 * nf * (1.0 - q.powi(2 * big_n as i32 - 1))
        - (2.0 * nf - 1.0) * q.powi(2 * big_n as i32)
        + 2.0 * q.powi(2 * big_n as i32 - 1);
    let delta_nonad = 2.0 * nf * (1.0 - q.powi(big_n as i32)) + q.powi(big_n as i32);
    GapInstance {
        big_n,
        p: q,
        horizon: 2 * big_n,
        budget: 2,
        delta_ad,
        delta_nonad,
        ratio: delta_ad / delta_nonad,
    }
}

/// Limit of `gap_closed_forms(N).ratio` as N grows (numerator and
/// denominator approach 2N·(1 - 1/e²)·… respectively; the ratio tends to
/// (e² - 2) / (e·(e - 1)) ≈ 1.15378).
pub fn closed_form_ratio_limit() -> f64 {
    let e = std::f64::consts::E;
    (e * e - 2.0) / (e * (e - 1.0))
}

/// The watch-then-reseed policy on the line: seed the head first, then hold
/// the second seed until the cascade stalls or the clock runs out, placing
/// it on the lowest-id (closest) inactive node.
struct WatchThenReseed;

impl SeedingPolicy for WatchThenReseed {
    fn name(&self) -> String {
        "watch-then-reseed".into()
    }

    fn decide(&self, graph: &Graph, state: &PolicyState, _key: StreamKey) -> PolicyDecision {
        let seeds = if state.step_index == 1 {
            vec![0]
        } else if state.k >= 1 && (state.t == 1 || state.status.is_final(graph)) {
            inactive_nodes(graph, state.status).first().copied().into_iter().collect()
        } else {
            Vec::new()
        };
        PolicyDecision { seeds, trace: crate::policy::DecisionTrace::None }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SimStats {
    pub mean: f64,
    pub stddev: f64,
    pub stderr: f64,
    pub trials: u32,
}

/// Monte Carlo value of the watch-then-reseed policy on the line family
/// (horizon `2N`, budget 2). Its mean converges to `delta_ad`.
pub fn simulate_line_adaptive_policy(big_n: u32, trials: u32, seed: u64) -> SimStats {
    let graph = generate_line_graph(big_n).expect("N >= 2");
    let cfg = ProcessConfig { horizon: 2 * big_n, budget: 2 };
    let root = StreamKey::new(seed);
    let (sum, sum_sq) = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let r = run_seeding_process(&graph, &WatchThenReseed, &cfg, trial, root.child(trial as u64))
                .expect("policy respects the budget");
            (r.influence as u64, (r.influence as u64).pow(2))
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let nf = trials.max(1) as f64;
    let mean = sum as f64 / nf;
    let var = if trials > 1 { (sum_sq as f64 - nf * mean * mean).max(0.0) / (nf - 1.0) } else { 0.0 };
    let stddev = var.sqrt();
    SimStats { mean, stddev, stderr: stddev / nf.sqrt(), trials }
}
