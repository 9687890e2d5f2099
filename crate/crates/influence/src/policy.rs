//! Seeding policies: how to split a seed budget across diffusion rounds.
//!
//! A policy sees the current [`PolicyState`] (observed status, remaining
//! rounds `t`, remaining budget `k`) and returns the seeds to commit this
//! round. Five strategies are provided:
//!
//! * [`NonAdaptivePolicy`]: spend everything up front.
//! * [`StaticPolicy`]: spend along a precomputed [`SeedingPattern`].
//! * [`GreedyPolicy`]: hold budget until the cascade stalls, then drip one
//!   seed; dump the rest in the last round.
//! * [`SofPolicy`]: one-step foresight; picks the now/later budget split
//!   whose estimated final spread is best.
//! * [`FfPolicy`]: scores each greedy candidate with two regret indicators
//!   (would a later pick do the same job? does waiting a round cost time?)
//!   and accepts a prefix.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion::{advance_round, estimate_g_forward_sum, EdgeState, Status};
use crate::graph::{EdgeId, Graph, NodeId};
use crate::rng::{keyed_flip, purpose, StreamKey};
use crate::rrset::{select_seeds, SelectorConfig};

/// What a policy sees when asked for a decision. `t` counts the remaining
/// diffusion rounds including the one about to run (so `t = 1` is the last
/// chance to seed); `k` is the unspent budget.
#[derive(Clone, Copy, Debug)]
pub struct PolicyState<'a> {
    pub status: &'a Status,
    pub t: u32,
    pub k: u32,
    pub step_index: u32,
}

/// Per-candidate indicator values recorded by [`FfPolicy`].
#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorRow {
    pub candidate: NodeId,
    /// Substitutability; `None` when the round weight made it irrelevant.
    pub ma: Option<f64>,
    pub mt: f64,
    pub ind: f64,
    pub accepted: bool,
}

/// Optional per-decision diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub enum DecisionTrace {
    None,
    /// Estimated value per now-budget `k1` (index = `k1`), plus the argmax.
    Foresight { beta_bars: Vec<f64>, chosen_k1: u32 },
    Indicators { rows: Vec<IndicatorRow> },
}

#[derive(Clone, Debug)]
pub struct PolicyDecision {
    pub seeds: Vec<NodeId>,
    pub trace: DecisionTrace,
}

impl PolicyDecision {
    /// A decision without diagnostics.
    pub fn plain(seeds: Vec<NodeId>) -> PolicyDecision {
        PolicyDecision { seeds, trace: DecisionTrace::None }
    }
}

pub trait SeedingPolicy: Sync {
    fn name(&self) -> String;
    /// Choose this round's seeds. Must return at most `state.k` distinct
    /// inactive nodes; called every round, even with `k = 0`.
    fn decide(&self, graph: &Graph, state: &PolicyState, key: StreamKey) -> PolicyDecision;
}

#[derive(Debug, thiserror::Error)]
pub enum PolicyError {
    #[error("{0}")]
    BadParam(String),
}

/// Per-round seed counts for a whole process; entry `i` is round `i + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedingPattern(pub Vec<u32>);

impl SeedingPattern {
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn amount_at(&self, step_index: u32) -> u32 {
        self.0.get(step_index as usize - 1).copied().unwrap_or(0)
    }
}

/// Spread `budget` over `horizon` rounds, seeding every `filter`-th round:
/// `floor(horizon / filter)` batches of `floor(budget / batches)` at rounds
/// `1, 1 + filter, 1 + 2 * filter, ...`, with any remainder appended to the
/// final round.
pub fn make_k_filter_pattern(horizon: u32, budget: u32, filter: u32) -> Result<SeedingPattern, PolicyError> {
    if filter < 1 || filter > horizon {
        return Err(PolicyError::BadParam(format!(
            "filter must lie in 1..={horizon}, got {filter}"
        )));
    }
    if budget < 1 {
        return Err(PolicyError::BadParam("budget must be at least 1".into()));
    }
    let batches = horizon / filter;
    let base = budget / batches;
    let mut amounts = vec![0u32; horizon as usize];
    for j in 0..batches {
        amounts[(j * filter) as usize] = base;
    }
    let remainder = budget - base * batches;
    amounts[horizon as usize - 1] += remainder;
    Ok(SeedingPattern(amounts))
}

/// Spend the whole budget in round one, chosen for the full horizon.
pub struct NonAdaptivePolicy {
    pub selector: SelectorConfig,
}

impl SeedingPolicy for NonAdaptivePolicy {
    fn name(&self) -> String {
        "nonadaptive".into()
    }

    fn decide(&self, graph: &Graph, state: &PolicyState, key: StreamKey) -> PolicyDecision {
        if state.step_index != 1 {
            return PolicyDecision::plain(Vec::new());
        }
        PolicyDecision::plain(select_seeds(graph, state.status, state.t, state.k, &self.selector, key))
    }
}

/// Follow a fixed per-round pattern, re-selecting nodes adaptively at each
/// seeding round (the schedule is static, the choice of nodes is not).
pub struct StaticPolicy {
    pub pattern: SeedingPattern,
    pub selector: SelectorConfig,
}

impl SeedingPolicy for StaticPolicy {
    fn name(&self) -> String {
        "static".into()
    }

    fn decide(&self, graph: &Graph, state: &PolicyState, key: StreamKey) -> PolicyDecision {
        let amount = self.pattern.amount_at(state.step_index).min(state.k);
        if amount == 0 {
            return PolicyDecision::plain(Vec::new());
        }
        PolicyDecision::plain(select_seeds(graph, state.status, state.t, amount, &self.selector, key))
    }
}

/// Wait while the cascade is still running; when it has gone final, spend a
/// single seed; in the last round, spend whatever is left.
pub struct GreedyPolicy {
    pub selector: SelectorConfig,
}

impl SeedingPolicy for GreedyPolicy {
    fn name(&self) -> String {
        "greedy".into()
    }

    fn decide(&self, graph: &Graph, state: &PolicyState, key: StreamKey) -> PolicyDecision {
        let amount = if state.t == 1 {
            state.k
        } else if state.status.is_final(graph) {
            state.k.min(1)
        } else {
            0
        };
        if amount == 0 {
            return PolicyDecision::plain(Vec::new());
        }
        PolicyDecision::plain(select_seeds(graph, state.status, state.t, amount, &self.selector, key))
    }
}

/// Sampling knobs shared by the foresight policies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForesightConfig {
    /// Outer Monte Carlo samples per estimate.
    pub samples: u32,
    /// Forward cascades per inner spread estimate.
    pub g_samples: u32,
    /// Acceptance threshold for [`FfPolicy`], in `[0, 1]`.
    pub theta: f64,
    /// Selector for the decision-level candidate choice.
    pub selector: SelectorConfig,
    /// Cheaper selector used inside foresight estimates.
    pub inner_selector: SelectorConfig,
    /// Denominator guard, as a fraction of `n`: ratios whose denominator
    /// estimate falls below `denom_guard_scale * n` are defined as 0.
    pub denom_guard_scale: f64,
}

impl Default for ForesightConfig {
    fn default() -> Self {
        ForesightConfig {
            samples: 50,
            g_samples: 10,
            theta: 0.5,
            selector: SelectorConfig::fixed(2000),
            inner_selector: SelectorConfig::fixed(300),
            denom_guard_scale: 1e-6,
        }
    }
}

/// Estimated final spread when `k1` of the `k` remaining seeds are committed
/// now and the rest next round: commit `gr(status, t, k1)`, watch one
/// diffusion round, then finish greedily with `k - k1` seeds and `t - 1`
/// rounds. The now-seeds are selected once and shared by all samples; only
/// the reaction to the observed round is resampled. Requires `t >= 2`.
pub fn estimate_beta_bar(
    graph: &Graph,
    status: &Status,
    t: u32,
    k: u32,
    k1: u32,
    cfg: &ForesightConfig,
    key: StreamKey,
) -> f64 {
    assert!(t >= 2, "one-step foresight needs at least two remaining rounds");
    assert!(k1 <= k);
    let now = select_seeds(graph, status, t, k1, &cfg.inner_selector, key.child(0));
    let mut committed = status.clone();
    for &s in &now {
        committed.activate(s);
    }
    let samples = cfg.samples.max(1);
    let g_samples = cfg.g_samples.max(1);
    let total: u64 = (0..samples)
        .into_par_iter()
        .map(|j| {
            let sample_key = key.child(1).child(j as u64);
            let mut rng = sample_key.child(purpose::DIFFUSE).rng();
            let u_star = advance_round(graph, &committed, &[], &mut rng);
            let later = select_seeds(graph, &u_star, t - 1, k - k1, &cfg.inner_selector, sample_key);
            estimate_g_forward_sum(graph, &u_star, &later, t - 1, g_samples, sample_key.child(purpose::G_FORWARD))
        })
        .sum();
    total as f64 / (samples as u64 * g_samples as u64) as f64
}

/// One-step foresight: try every split of the remaining budget between this
/// round and the next, estimate each, and commit the best split now. Ties
/// favour committing more. The whole budget goes in when only one round is
/// left.
pub struct SofPolicy {
    pub cfg: ForesightConfig,
}

impl SeedingPolicy for SofPolicy {
    fn name(&self) -> String {
        "sof".into()
    }

    fn decide(&self, graph: &Graph, state: &PolicyState, key: StreamKey) -> PolicyDecision {
        let k = state.k;
        if k == 0 {
            return PolicyDecision::plain(Vec::new());
        }
        if state.t == 1 {
            let seeds = select_seeds(graph, state.status, 1, k, &self.cfg.selector, key.child(purpose::DECIDE));
            return PolicyDecision {
                seeds,
                trace: DecisionTrace::Foresight { beta_bars: Vec::new(), chosen_k1: k },
            };
        }
        let mut beta_bars = Vec::with_capacity(k as usize + 1);
        let mut best = (0u32, f64::NEG_INFINITY);
        for k1 in 0..=k {
            let b = estimate_beta_bar(
                graph,
                state.status,
                state.t,
                k,
                k1,
                &self.cfg,
                key.child(purpose::BETA_SAMPLE).child(k1 as u64),
            );
            beta_bars.push(b);
            if b >= best.1 {
                best = (k1, b); // >= : equal scores move the split upward
            }
        }
        let chosen = best.0;
        let seeds = if chosen == 0 {
            Vec::new()
        } else {
            select_seeds(graph, state.status, state.t, chosen, &self.cfg.selector, key.child(purpose::DECIDE))
        };
        PolicyDecision { seeds, trace: DecisionTrace::Foresight { beta_bars, chosen_k1: chosen } }
    }
}

// ---------------------------------------------------------------------------
// Regret indicators.
//
// Both indicators compare spreads under a common random cascade: each sample
// fixes one live-edge realization (lazily, via keyed coin flips), and every
// quantity inside the sample is a reachability count on that realization.
// On a fixed realization, spread within `t` rounds equals the number of
// nodes within `t` live hops of the seeds, so the estimators below are
// plain bounded BFS counts.

const INFINITE_DIST: u16 = u16::MAX;

#[inline]
fn edge_open(graph: &Graph, status: &Status, real_key: u64, e: EdgeId) -> bool {
    match status.edge_state(e) {
        EdgeState::Dead => false,
        EdgeState::Live => true,
        EdgeState::Unobserved => keyed_flip(real_key, e as u64, graph.prob(e)),
    }
}

/// Multi-source BFS distances over one realization, capped at `cap` hops.
/// Distances of unreached nodes stay `INFINITE_DIST`.
fn realized_dists(
    graph: &Graph,
    status: &Status,
    real_key: u64,
    sources: &[NodeId],
    cap: u32,
) -> Vec<u16> {
    let mut dist = vec![INFINITE_DIST; graph.node_count()];
    let mut level: Vec<NodeId> = Vec::with_capacity(sources.len());
    for &s in sources {
        if dist[s as usize] != 0 {
            dist[s as usize] = 0;
            level.push(s);
        }
    }
    for d in 1..=cap as u16 {
        if level.is_empty() {
            break;
        }
        let mut next = Vec::new();
        for &u in &level {
            for (e, v) in graph.out_edges(u) {
                if dist[v as usize] != INFINITE_DIST {
                    continue;
                }
                if edge_open(graph, status, real_key, e) {
                    dist[v as usize] = d;
                    next.push(v);
                }
            }
        }
        level = next;
    }
    dist
}

/// Marginal spread of seeding `v` after a delay: run the cascade from
/// `active(status) + s_i` for `t` rounds to reach a status `U*`, then count
/// the extra activations when `v` is seeded on `U*` with `t_star` rounds to
/// go. Each sample couples both stages on one realization.
pub fn compute_h(
    graph: &Graph,
    status: &Status,
    s_i: &[NodeId],
    v: NodeId,
    t: u32,
    t_star: u32,
    samples: u32,
    key: StreamKey,
) -> f64 {
    let samples = samples.max(1);
    let sum: u64 = (0..samples)
        .into_par_iter()
        .map(|j| h_sample(graph, status, s_i, v, t, t_star, key.child(purpose::REALIZATION).child(j as u64).raw()))
        .sum();
    sum as f64 / samples as f64
}

fn h_sample(
    graph: &Graph,
    status: &Status,
    s_i: &[NodeId],
    v: NodeId,
    t: u32,
    t_star: u32,
    real_key: u64,
) -> u64 {
    let mut sources: Vec<NodeId> = status.active_nodes().collect();
    sources.extend_from_slice(s_i);
    let d_src = realized_dists(graph, status, real_key, &sources, t + t_star);
    let d_v = realized_dists(graph, status, real_key, &[v], t_star);
    // |reach_{t+t*}(sources) ∪ reach_{t*}(v)| - |reach_t(sources)|
    let mut within_far = 0u64;
    let mut within_t = 0u64;
    let mut extra_v = 0u64;
    for w in 0..graph.node_count() {
        let ds = d_src[w] as u32;
        if ds <= t + t_star {
            within_far += 1;
            if ds <= t {
                within_t += 1;
            }
        } else if d_v[w] as u32 <= t_star {
            extra_v += 1;
        }
    }
    within_far + extra_v - within_t
}

/// Timeliness indicator: the share of `v`'s delayed marginal spread that
/// survives waiting one more round, `(h(t, t) - h(t, t-1)) / h(t, t)`,
/// clamped to `[0, 1]`. Defined as 1 when only one round remains (there is
/// no later round to weigh against) and 0 when the denominator estimate
/// falls below `denom_guard`.
pub fn compute_mt(
    graph: &Graph,
    status: &Status,
    s_i: &[NodeId],
    v: NodeId,
    t: u32,
    samples: u32,
    denom_guard: f64,
    key: StreamKey,
) -> f64 {
    if t <= 1 {
        return 1.0;
    }
    let samples = samples.max(1);
    // Common realizations for both horizons: h(t, t) and h(t, t-1) are
    // evaluated on the same coupled samples.
    let (sum_now, sum_delay): (u64, u64) = (0..samples)
        .into_par_iter()
        .map(|j| {
            let rk = key.child(purpose::REALIZATION).child(j as u64).raw();
            (
                h_sample(graph, status, s_i, v, t, t, rk),
                h_sample(graph, status, s_i, v, t, t - 1, rk),
            )
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let h_now = sum_now as f64 / samples as f64;
    if h_now < denom_guard {
        return 0.0;
    }
    ((sum_now - sum_delay) as f64 / sum_now as f64).clamp(0.0, 1.0)
}

/// Substitutability indicator: `v`'s marginal spread on top of the already
/// accepted seeds, relative to its standalone marginal spread. 1 means no
/// overlap (a disjoint candidate); small values mean the accepted seeds
/// already cover `v`'s audience. Clamped to `[0, 1]`; 0 when the
/// denominator estimate falls below `denom_guard`.
pub fn compute_ma(
    graph: &Graph,
    status: &Status,
    s_i: &[NodeId],
    v: NodeId,
    t: u32,
    samples: u32,
    denom_guard: f64,
    key: StreamKey,
) -> f64 {
    let samples = samples.max(1);
    let active: Vec<NodeId> = status.active_nodes().collect();
    let (num, den): (u64, u64) = (0..samples)
        .into_par_iter()
        .map(|j| {
            let rk = key.child(purpose::REALIZATION).child(j as u64).raw();
            let d_a = realized_dists(graph, status, rk, &active, t);
            let d_s = realized_dists(graph, status, rk, s_i, t);
            let d_v = realized_dists(graph, status, rk, &[v], t);
            let mut num_j = 0u64;
            let mut den_j = 0u64;
            for w in 0..graph.node_count() {
                if d_v[w] as u32 <= t && d_a[w] as u32 > t {
                    den_j += 1;
                    if d_s[w] as u32 > t {
                        num_j += 1;
                    }
                }
            }
            (num_j, den_j)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    if (den as f64 / samples as f64) < denom_guard {
        return 0.0;
    }
    (num as f64 / den as f64).clamp(0.0, 1.0)
}

/// Shared per-decision state for evaluating many candidates against the same
/// realizations: per sample, distances from the active set alone and from
/// active-plus-accepted-prefix, maintained incrementally as candidates are
/// accepted. Results match the standalone `compute_ma` / `compute_mt` bit
/// for bit (same realization keys, same counts).
struct IndicatorEngine<'a> {
    graph: &'a Graph,
    status: &'a Status,
    t: u32,
    real_keys: Vec<u64>,
    /// Per sample: distances from active ∪ accepted prefix, capped at 2t.
    d_srcs: Vec<Vec<u16>>,
    /// Per sample: nodes within t of the active set alone.
    d_active: Vec<Vec<u16>>,
}

impl<'a> IndicatorEngine<'a> {
    fn new(graph: &'a Graph, status: &'a Status, t: u32, samples: u32, key: StreamKey) -> Self {
        let real_keys: Vec<u64> = (0..samples.max(1))
            .map(|j| key.child(purpose::REALIZATION).child(j as u64).raw())
            .collect();
        let active: Vec<NodeId> = status.active_nodes().collect();
        let pairs: Vec<(Vec<u16>, Vec<u16>)> = real_keys
            .par_iter()
            .map(|&rk| {
                (
                    realized_dists(graph, status, rk, &active, 2 * t),
                    realized_dists(graph, status, rk, &active, t),
                )
            })
            .collect();
        let (d_srcs, d_active) = pairs.into_iter().unzip();
        IndicatorEngine { graph, status, t, real_keys, d_srcs, d_active }
    }

    /// `(ma numerator, ma denominator, h(t,t), h(t,t-1))` sums for `v`.
    fn score(&self, v: NodeId) -> (u64, u64, u64, u64) {
        let t = self.t;
        self.real_keys
            .par_iter()
            .enumerate()
            .map(|(j, &rk)| {
                let d_src = &self.d_srcs[j];
                let d_act = &self.d_active[j];
                let d_v = realized_dists(self.graph, self.status, rk, &[v], t);
                let mut ma_num = 0u64;
                let mut ma_den = 0u64;
                // union corrections and source-only counts for both horizons
                let mut far_now = 0u64; // d_src <= 2t
                let mut far_delay = 0u64; // d_src <= 2t - 1
                let mut near = 0u64; // d_src <= t
                let mut extra_now = 0u64; // d_v <= t, d_src > 2t
                let mut extra_delay = 0u64; // d_v <= t - 1, d_src > 2t - 1
                for w in 0..self.graph.node_count() {
                    let ds = d_src[w] as u32;
                    let dv = d_v[w] as u32;
                    if ds <= 2 * t {
                        far_now += 1;
                        if ds <= 2 * t - 1 {
                            far_delay += 1;
                            if ds <= t {
                                near += 1;
                            }
                        }
                    } else if dv <= t {
                        extra_now += 1;
                    }
                    if ds > 2 * t - 1 && dv + 1 <= t {
                        extra_delay += 1;
                    }
                    if dv <= t && d_act[w] as u32 > t {
                        ma_den += 1;
                        if ds > t {
                            ma_num += 1;
                        }
                    }
                }
                let h_now = far_now + extra_now - near;
                let h_delay = far_delay + extra_delay - near;
                (ma_num, ma_den, h_now, h_delay)
            })
            .reduce(|| (0, 0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2, a.3 + b.3))
    }

    /// Fold an accepted candidate into the prefix distances.
    fn accept(&mut self, v: NodeId) {
        let t = self.t;
        self.real_keys
            .par_iter()
            .zip(self.d_srcs.par_iter_mut())
            .for_each(|(&rk, d_src)| {
                let d_v = realized_dists(self.graph, self.status, rk, &[v], 2 * t);
                for w in 0..d_src.len() {
                    d_src[w] = d_src[w].min(d_v[w]);
                }
            });
    }
}

/// Candidate filtering by regret indicators. Greedy candidates are taken in
/// order; candidate `i + 1` is accepted while
/// `alpha * Ma + (1 - alpha) * Mt >= theta` with `alpha = 1 - 1/t`, and the
/// first rejection ends the round. With one round left every candidate is
/// accepted (the budget has nowhere else to go).
pub struct FfPolicy {
    pub cfg: ForesightConfig,
}

impl SeedingPolicy for FfPolicy {
    fn name(&self) -> String {
        "ff".into()
    }

    fn decide(&self, graph: &Graph, state: &PolicyState, key: StreamKey) -> PolicyDecision {
        let k = state.k;
        if k == 0 {
            return PolicyDecision::plain(Vec::new());
        }
        let candidates =
            select_seeds(graph, state.status, state.t, k, &self.cfg.selector, key.child(purpose::DECIDE));
        let t = state.t;
        if t == 1 {
            let rows = candidates
                .iter()
                .map(|&c| IndicatorRow { candidate: c, ma: None, mt: 1.0, ind: 1.0, accepted: true })
                .collect();
            return PolicyDecision { seeds: candidates, trace: DecisionTrace::Indicators { rows } };
        }
        let samples = self.cfg.samples.max(1);
        let guard = self.cfg.denom_guard_scale * graph.node_count() as f64;
        let alpha = 1.0 - 1.0 / t as f64;
        let mut engine = IndicatorEngine::new(graph, state.status, t, samples, key);
        let mut accepted: Vec<NodeId> = Vec::new();
        let mut rows: Vec<IndicatorRow> = Vec::new();
        for &v in &candidates {
            let (ma_num, ma_den, h_now, h_delay) = engine.score(v);
            let ma = if (ma_den as f64 / samples as f64) < guard {
                0.0
            } else {
                (ma_num as f64 / ma_den as f64).clamp(0.0, 1.0)
            };
            let mt = if (h_now as f64 / samples as f64) < guard {
                0.0
            } else {
                ((h_now - h_delay) as f64 / h_now as f64).clamp(0.0, 1.0)
            };
            let ind = alpha * ma + (1.0 - alpha) * mt;
            let ok = ind >= self.cfg.theta;
            rows.push(IndicatorRow { candidate: v, ma: Some(ma), mt, ind, accepted: ok });
            if !ok {
                break;
            }
            engine.accept(v);
            accepted.push(v);
        }
        PolicyDecision { seeds: accepted, trace: DecisionTrace::Indicators { rows } }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ProbModel;

    fn state<'a>(status: &'a Status, t: u32, k: u32, step_index: u32) -> PolicyState<'a> {
        PolicyState { status, t, k, step_index }
    }

    #[test]
    fn k_filter_patterns() {
        assert_eq!(
            make_k_filter_pattern(10, 50, 2).unwrap().0,
            vec![10, 0, 10, 0, 10, 0, 10, 0, 10, 0]
        );
        assert_eq!(make_k_filter_pattern(4, 7, 2).unwrap().0, vec![3, 0, 3, 1]);
        assert_eq!(make_k_filter_pattern(3, 5, 2).unwrap().0, vec![5, 0, 0]);
        assert_eq!(make_k_filter_pattern(3, 7, 1).unwrap().0, vec![2, 2, 3]);
        assert!(make_k_filter_pattern(3, 5, 4).is_err());
        assert!(make_k_filter_pattern(3, 0, 1).is_err());
        for (t, b, f) in [(10u32, 50u32, 5u32), (7, 13, 3), (9, 2, 4), (5, 5, 5)] {
            assert_eq!(make_k_filter_pattern(t, b, f).unwrap().total(), b);
        }
    }

    #[test]
    fn nonadaptive_spends_once() {
        let g = crate::graph::generate_power_law(30, 2.5, 3.0, 1).unwrap();
        let st = Status::empty(&g);
        let p = NonAdaptivePolicy { selector: SelectorConfig::fixed(400) };
        let d1 = p.decide(&g, &state(&st, 5, 3, 1), StreamKey::new(2));
        assert_eq!(d1.seeds.len(), 3);
        let d2 = p.decide(&g, &state(&st, 4, 0, 2), StreamKey::new(2));
        assert!(d2.seeds.is_empty());
    }

    #[test]
    fn static_follows_pattern_and_caps_at_budget() {
        let g = crate::graph::generate_power_law(30, 2.5, 3.0, 1).unwrap();
        let st = Status::empty(&g);
        let pattern = make_k_filter_pattern(3, 5, 2).unwrap(); // (5, 0, 0)
        let p = StaticPolicy { pattern, selector: SelectorConfig::fixed(400) };
        let d1 = p.decide(&g, &state(&st, 3, 4, 1), StreamKey::new(2));
        assert_eq!(d1.seeds.len(), 4, "pattern amount capped at remaining budget");
        let d2 = p.decide(&g, &state(&st, 2, 0, 2), StreamKey::new(2));
        assert!(d2.seeds.is_empty());
    }

    #[test]
    fn greedy_three_cases() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)], ProbModel::Uniform(0.5)).unwrap();
        let p = GreedyPolicy { selector: SelectorConfig::fixed(400) };
        // not final, t > 1: hold
        let mut st = Status::empty(&g);
        st.activate(0);
        assert!(p.decide(&g, &state(&st, 3, 2, 2), StreamKey::new(1)).seeds.is_empty());
        // final, t > 1: one seed
        st.observe(0, false);
        assert_eq!(p.decide(&g, &state(&st, 3, 2, 2), StreamKey::new(1)).seeds.len(), 1);
        // last round: dump the budget
        assert_eq!(p.decide(&g, &state(&st, 1, 2, 3), StreamKey::new(1)).seeds.len(), 2);
    }

    #[test]
    fn foresight_prefers_committing_on_deterministic_path() {
        // 0 -> 1 -> 2 with p = 1, two rounds, one seed: committing now is
        // worth 3 nodes, waiting only 2.
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)], ProbModel::Uniform(1.0)).unwrap();
        let st = Status::empty(&g);
        let cfg = ForesightConfig { samples: 8, g_samples: 4, ..ForesightConfig::default() };
        let b0 = estimate_beta_bar(&g, &st, 2, 1, 0, &cfg, StreamKey::new(3));
        let b1 = estimate_beta_bar(&g, &st, 2, 1, 1, &cfg, StreamKey::new(3));
        assert_eq!(b0, 2.0);
        assert_eq!(b1, 3.0);
        let p = SofPolicy { cfg };
        let d = p.decide(&g, &state(&st, 2, 1, 1), StreamKey::new(4));
        assert_eq!(d.seeds, vec![0]);
        match d.trace {
            DecisionTrace::Foresight { chosen_k1, .. } => assert_eq!(chosen_k1, 1),
            _ => panic!("expected foresight trace"),
        }
    }

    #[test]
    fn sof_spends_everything_in_last_round() {
        let g = crate::graph::generate_power_law(25, 2.5, 3.0, 5).unwrap();
        let st = Status::empty(&g);
        let p = SofPolicy { cfg: ForesightConfig::default() };
        let d = p.decide(&g, &state(&st, 1, 4, 3), StreamKey::new(5));
        assert_eq!(d.seeds.len(), 4);
    }

    #[test]
    fn h_counts_only_the_candidate_when_it_cannot_spread() {
        // v = 2 isolated; cascade part 0 -> 1 already final.
        let g = Graph::from_edges(3, &[(0, 1)], ProbModel::Uniform(0.5)).unwrap();
        let mut st = Status::empty(&g);
        st.activate(0);
        st.observe(0, false);
        let h = compute_h(&g, &st, &[], 2, 2, 0, 64, StreamKey::new(6));
        assert_eq!(h, 1.0, "t* = 0 adds v itself and nothing else");
        let mt = compute_mt(&g, &st, &[], 2, 2, 64, 1e-6, StreamKey::new(6));
        assert_eq!(mt, 0.0, "an isolated candidate loses nothing by waiting");
    }

    #[test]
    fn mt_is_one_with_a_single_round_left() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)], ProbModel::Uniform(0.5)).unwrap();
        let st = Status::empty(&g);
        assert_eq!(compute_mt(&g, &st, &[], 1, 1, 64, 1e-6, StreamKey::new(7)), 1.0);
    }

    #[test]
    fn ma_is_one_for_disjoint_candidate_and_empty_prefix() {
        // components {0, 1} and {2, 3}
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)], ProbModel::Uniform(0.6)).unwrap();
        let mut st = Status::empty(&g);
        st.activate(0);
        let ma = compute_ma(&g, &st, &[], 2, 2, 128, 1e-6, StreamKey::new(8));
        assert_eq!(ma, 1.0, "empty prefix: numerator and denominator coincide");
        let ma2 = compute_ma(&g, &st, &[1], 2, 2, 128, 1e-6, StreamKey::new(9));
        assert_eq!(ma2, 1.0, "disjoint component: no overlap with the prefix");
        // same component, deterministic edges: v's audience (node 2) is
        // covered by the prefix, only v itself survives in the numerator
        let g2 = Graph::from_edges(3, &[(0, 2), (1, 2)], ProbModel::Uniform(1.0)).unwrap();
        let st2 = Status::empty(&g2);
        let ma3 = compute_ma(&g2, &st2, &[0], 1, 1, 64, 1e-6, StreamKey::new(10));
        assert_eq!(ma3, 0.5, "marginal 1 of standalone 2");
    }

    #[test]
    fn engine_matches_standalone_indicators() {
        let g = crate::graph::generate_power_law(40, 2.5, 3.0, 11).unwrap();
        let mut st = Status::empty(&g);
        st.activate(3);
        let t = 3;
        let samples = 40;
        let key = StreamKey::new(12);
        let prefix = [7u32, 9u32];
        let mut engine = IndicatorEngine::new(&g, &st, t, samples, key);
        for &p in &prefix {
            engine.accept(p);
        }
        for v in [0u32, 5, 11] {
            let (ma_num, ma_den, h_now, h_delay) = engine.score(v);
            let ma_fast = ma_num as f64 / ma_den as f64;
            let ma_slow = compute_ma(&g, &st, &prefix, v, t, samples, 0.0, key);
            assert!((ma_fast.clamp(0.0, 1.0) - ma_slow).abs() < 1e-12);
            let h_now_slow = compute_h(&g, &st, &prefix, v, t, t, samples, key);
            let h_delay_slow = compute_h(&g, &st, &prefix, v, t, t - 1, samples, key);
            assert_eq!(h_now as f64 / samples as f64, h_now_slow);
            assert_eq!(h_delay as f64 / samples as f64, h_delay_slow);
        }
    }

    #[test]
    fn ff_accepts_everything_in_last_round_and_obeys_theta_order() {
        let g = crate::graph::generate_power_law(50, 2.5, 4.0, 13).unwrap();
        let st = Status::empty(&g);
        let base = ForesightConfig { samples: 30, selector: SelectorConfig::fixed(400), ..ForesightConfig::default() };
        let last = FfPolicy { cfg: ForesightConfig { theta: 0.9, ..base } };
        let d = last.decide(&g, &state(&st, 1, 5, 5), StreamKey::new(14));
        assert_eq!(d.seeds.len(), 5);
        // monotone prefix in theta on a fixed key
        let key = StreamKey::new(15);
        let mut prev = usize::MAX;
        for theta in [0.0, 0.3, 0.6, 0.9, 1.0] {
            let p = FfPolicy { cfg: ForesightConfig { theta, ..base } };
            let len = p.decide(&g, &state(&st, 4, 5, 1), key).seeds.len();
            assert!(len <= prev, "theta = {theta}: prefix grew from {prev} to {len}");
            prev = len;
        }
        // theta = 0 accepts every candidate
        let all = FfPolicy { cfg: ForesightConfig { theta: 0.0, ..base } };
        assert_eq!(all.decide(&g, &state(&st, 4, 5, 1), key).seeds.len(), 5);
    }
}
