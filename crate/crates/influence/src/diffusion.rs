//! Partially observed independent-cascade diffusion.
//!
//! A [`Status`] is the information state of a running cascade: the set of
//! active nodes plus the edges whose activation attempts have already been
//! observed (live = the attempt succeeded, dead = it failed). Each edge is
//! attempted at most once, ever. One diffusion round activates targets of
//! successful attempts simultaneously; a node attempts an out-edge exactly
//! when it is active, the target is inactive, and the edge is unobserved.

use fixedbitset::FixedBitSet;
use rand::Rng;
use rayon::prelude::*;

use crate::graph::{EdgeId, Graph, NodeId};
use crate::rng::StreamKey;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeState {
    Unobserved,
    Live,
    Dead,
}

/// Information state of a cascade: active nodes plus observed edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Status {
    active: FixedBitSet,
    live: FixedBitSet,
    dead: FixedBitSet,
}

impl Status {
    /// All nodes inactive, no edge observed.
    pub fn empty(graph: &Graph) -> Status {
        Status {
            active: FixedBitSet::with_capacity(graph.node_count()),
            live: FixedBitSet::with_capacity(graph.edge_count()),
            dead: FixedBitSet::with_capacity(graph.edge_count()),
        }
    }

    /// Empty status with `seeds` active (the zero-round seeding convention:
    /// seeds activate but attempt nothing).
    pub fn with_seeds(graph: &Graph, seeds: &[NodeId]) -> Status {
        let mut st = Status::empty(graph);
        for &s in seeds {
            st.active.insert(s as usize);
        }
        st
    }

    #[inline]
    pub fn is_active(&self, u: NodeId) -> bool {
        self.active.contains(u as usize)
    }

    pub fn active_count(&self) -> usize {
        self.active.count_ones(..)
    }

    pub fn active_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.active.ones().map(|u| u as NodeId)
    }

    #[inline]
    pub fn edge_state(&self, e: EdgeId) -> EdgeState {
        if self.live.contains(e as usize) {
            EdgeState::Live
        } else if self.dead.contains(e as usize) {
            EdgeState::Dead
        } else {
            EdgeState::Unobserved
        }
    }

    pub fn observed_count(&self) -> usize {
        self.live.count_ones(..) + self.dead.count_ones(..)
    }

    /// Mark a node active (test/setup hook; the cascade itself goes through
    /// [`advance_round`]).
    pub fn activate(&mut self, u: NodeId) {
        self.active.insert(u as usize);
    }

    /// Record an observed edge. Panics if the edge was already observed with
    /// the opposite outcome; observations are permanent.
    pub fn observe(&mut self, e: EdgeId, live: bool) {
        if live {
            assert!(!self.dead.contains(e as usize), "edge {e} already dead");
            self.live.insert(e as usize);
        } else {
            assert!(!self.live.contains(e as usize), "edge {e} already live");
            self.dead.insert(e as usize);
        }
    }

    /// Check the structural invariants: live and dead are disjoint, and every
    /// observed edge has an active source (an attempt requires one).
    pub fn validate(&self, graph: &Graph) -> Result<(), String> {
        if self.live.intersection(&self.dead).next().is_some() {
            return Err("an edge is both live and dead".into());
        }
        for e in self.live.ones().chain(self.dead.ones()) {
            let (u, _) = graph.endpoints(e as EdgeId);
            if !self.is_active(u) {
                return Err(format!("observed edge {e} has inactive source {u}"));
            }
        }
        Ok(())
    }

    /// Nodes that will attempt in the next round: active, with at least one
    /// unobserved out-edge to an inactive target.
    pub fn frontier(&self, graph: &Graph) -> Vec<NodeId> {
        self.active_nodes()
            .filter(|&u| {
                graph.out_edges(u).any(|(e, v)| {
                    !self.is_active(v) && self.edge_state(e) == EdgeState::Unobserved
                })
            })
            .collect()
    }

    /// True when no activation attempt remains: every edge from an active
    /// node to an inactive one has been observed dead.
    pub fn is_final(&self, graph: &Graph) -> bool {
        self.active_nodes().all(|u| {
            graph
                .out_edges(u)
                .all(|(e, v)| self.is_active(v) || self.edge_state(e) == EdgeState::Dead)
        })
    }
}

/// Live/dead assignment for every edge, consistent with the status it
/// extends: observed edges keep their outcome, unobserved edges are flipped
/// independently with their activation probability.
#[derive(Clone, Debug)]
pub struct LiveEdgeRealization {
    live: FixedBitSet,
}

impl LiveEdgeRealization {
    pub fn sample<R: Rng>(graph: &Graph, status: &Status, rng: &mut R) -> LiveEdgeRealization {
        let m = graph.edge_count();
        let mut live = FixedBitSet::with_capacity(m);
        for e in 0..m as EdgeId {
            match status.edge_state(e) {
                EdgeState::Live => live.insert(e as usize),
                EdgeState::Dead => {}
                EdgeState::Unobserved => {
                    if rng.gen_bool(graph.prob(e)) {
                        live.insert(e as usize);
                    }
                }
            }
        }
        LiveEdgeRealization { live }
    }

    #[inline]
    pub fn is_live(&self, e: EdgeId) -> bool {
        self.live.contains(e as usize)
    }

    /// Nodes within `t` live-edge hops of `sources`.
    pub fn bounded_reach(&self, graph: &Graph, sources: &[NodeId], t: u32) -> FixedBitSet {
        let mut seen = FixedBitSet::with_capacity(graph.node_count());
        let mut queue: Vec<NodeId> = Vec::new();
        for &s in sources {
            if !seen.contains(s as usize) {
                seen.insert(s as usize);
                queue.push(s);
            }
        }
        for _ in 0..t {
            if queue.is_empty() {
                break;
            }
            let mut next = Vec::new();
            for &u in &queue {
                for (e, v) in graph.out_edges(u) {
                    if self.is_live(e) && !seen.contains(v as usize) {
                        seen.insert(v as usize);
                        next.push(v);
                    }
                }
            }
            queue = next;
        }
        seen
    }
}

/// One-round cascade step, generic in how unobserved edges resolve so the
/// random walk and the replay-on-a-realization share one body.
///
/// `attempting` holds the round's attempting set on entry and the next
/// round's on exit. Targets are judged against the active set as it stood at
/// the start of the round: two nodes attempting the same target in one round
/// both observe their edges.
fn cascade_round<F: FnMut(EdgeId) -> bool>(
    graph: &Graph,
    st: &mut Status,
    attempting: &mut Vec<NodeId>,
    flip: &mut F,
) {
    let mut newly: Vec<NodeId> = Vec::new();
    for &u in attempting.iter() {
        for (e, v) in graph.out_edges(u) {
            if st.active.contains(v as usize) {
                continue; // active targets are never attempted; edge stays unobserved
            }
            let goes_live = match st.edge_state(e) {
                EdgeState::Dead => continue,
                EdgeState::Live => true, // already known good; propagate without re-flipping
                EdgeState::Unobserved => {
                    let outcome = flip(e);
                    st.observe(e, outcome);
                    outcome
                }
            };
            if goes_live && !newly.contains(&v) {
                newly.push(v);
            }
        }
    }
    for &v in &newly {
        st.active.insert(v as usize);
    }
    *attempting = newly;
}

/// Seeds that are genuinely new (inactive) — seeding an active node is a
/// no-op that costs budget but changes nothing.
fn effective_seeds(st: &Status, seeds: &[NodeId]) -> Vec<NodeId> {
    let mut out = Vec::new();
    for &s in seeds {
        if !st.active.contains(s as usize) && !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// One diffusion round: `new_seeds` join the active set first and attempt in
/// this round together with the existing frontier. Returns the new status;
/// the input is untouched.
pub fn advance_round<R: Rng>(graph: &Graph, status: &Status, new_seeds: &[NodeId], rng: &mut R) -> Status {
    let mut st = status.clone();
    let mut attempting = st.frontier(graph);
    for s in effective_seeds(&st, new_seeds) {
        st.active.insert(s as usize);
        attempting.push(s);
    }
    let mut flip = |e: EdgeId| rng.gen_bool(graph.prob(e));
    cascade_round(graph, &mut st, &mut attempting, &mut flip);
    st
}

fn simulate_with<F: FnMut(EdgeId) -> bool>(
    graph: &Graph,
    status: &Status,
    seeds: &[NodeId],
    t: u32,
    flip: &mut F,
) -> Status {
    let mut st = status.clone();
    if t == 0 {
        for s in effective_seeds(&st, seeds) {
            st.active.insert(s as usize);
        }
        return st;
    }
    // The initial frontier needs one scan of the active set; afterwards only
    // nodes activated in the previous round (plus the new seeds) can attempt.
    let mut attempting = st.frontier(graph);
    for s in effective_seeds(&st, seeds) {
        st.active.insert(s as usize);
        attempting.push(s);
    }
    for _ in 0..t {
        if attempting.is_empty() {
            break; // fixed point: nothing can change from here on
        }
        cascade_round(graph, &mut st, &mut attempting, flip);
    }
    st
}

/// Run `t` rounds: seeds join in round one, then the cascade unfolds on its
/// own. `t = 0` only merges the seeds into the active set.
pub fn simulate<R: Rng>(graph: &Graph, status: &Status, seeds: &[NodeId], t: u32, rng: &mut R) -> Status {
    let mut flip = |e: EdgeId| rng.gen_bool(graph.prob(e));
    simulate_with(graph, status, seeds, t, &mut flip)
}

/// Deterministic replay of `simulate` against a fixed edge realization.
pub fn simulate_on_realization(
    graph: &Graph,
    status: &Status,
    seeds: &[NodeId],
    t: u32,
    realization: &LiveEdgeRealization,
) -> Status {
    let mut flip = |e: EdgeId| realization.is_live(e);
    simulate_with(graph, status, seeds, t, &mut flip)
}

/// Sum over `samples` independent cascades of the final active-set size.
/// Integer-valued, so parallel and serial runs agree bit for bit.
pub fn estimate_g_forward_sum(
    graph: &Graph,
    status: &Status,
    seeds: &[NodeId],
    t: u32,
    samples: u32,
    key: StreamKey,
) -> u64 {
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = key.child(i as u64).rng();
            simulate(graph, status, seeds, t, &mut rng).active_count() as u64
        })
        .sum()
}

/// Monte Carlo estimate of the expected number of active nodes after seeding
/// `seeds` on top of `status` and letting the cascade run `t` rounds.
pub fn estimate_g_forward(
    graph: &Graph,
    status: &Status,
    seeds: &[NodeId],
    t: u32,
    samples: u32,
    key: StreamKey,
) -> f64 {
    assert!(samples > 0, "need at least one sample");
    estimate_g_forward_sum(graph, status, seeds, t, samples, key) as f64 / samples as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ProbModel;

    fn edge_graph(p: f64) -> Graph {
        Graph::from_edges(2, &[(0, 1)], ProbModel::Uniform(p)).unwrap()
    }

    #[test]
    fn zero_rounds_only_seeds() {
        let g = edge_graph(1.0);
        let mut rng = StreamKey::new(1).rng();
        let st = simulate(&g, &Status::empty(&g), &[0], 0, &mut rng);
        assert!(st.is_active(0) && !st.is_active(1));
        assert_eq!(st.observed_count(), 0);
    }

    #[test]
    fn new_seeds_attempt_in_their_round() {
        let g = edge_graph(1.0);
        let mut rng = StreamKey::new(1).rng();
        let st = advance_round(&g, &Status::empty(&g), &[0], &mut rng);
        assert!(st.is_active(1), "p = 1 edge must fire in the seeding round");
        assert_eq!(st.edge_state(0), EdgeState::Live);
    }

    #[test]
    fn dead_edge_is_never_retried() {
        let g = edge_graph(0.5);
        let mut st = Status::empty(&g);
        st.activate(0);
        st.observe(0, false);
        assert!(st.is_final(&g));
        assert!(st.frontier(&g).is_empty());
        let mut rng = StreamKey::new(2).rng();
        let after = simulate(&g, &st, &[], 5, &mut rng);
        assert_eq!(after, st, "final status is a fixed point");
    }

    #[test]
    fn frontier_matches_definition() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)], ProbModel::Uniform(0.5)).unwrap();
        let mut st = Status::empty(&g);
        st.activate(0);
        assert_eq!(st.frontier(&g), vec![0]);
        st.observe(0, false);
        assert!(st.frontier(&g).is_empty());
        assert!(st.is_final(&g));
        // an active target hides the edge from the frontier rule
        let mut st2 = Status::empty(&g);
        st2.activate(0);
        st2.activate(1);
        assert_eq!(st2.frontier(&g), vec![1], "0 -> 1 targets an active node");
    }

    #[test]
    fn simultaneous_attempts_both_observe() {
        // 0 -> 2 and 1 -> 2 with p = 0: both edges must come up dead in one round.
        let g = Graph::from_edges(3, &[(0, 2), (1, 2)], ProbModel::Uniform(0.5))
            .unwrap()
            .with_probs(vec![0.0, 0.0]);
        let mut rng = StreamKey::new(3).rng();
        let st = advance_round(&g, &Status::empty(&g), &[0, 1], &mut rng);
        assert_eq!(st.edge_state(0), EdgeState::Dead);
        assert_eq!(st.edge_state(1), EdgeState::Dead);
        assert!(!st.is_active(2));
    }

    #[test]
    fn growth_is_monotone_and_observations_accumulate() {
        let g = crate::graph::generate_power_law(60, 2.5, 3.0, 9).unwrap();
        let mut rng = StreamKey::new(4).rng();
        let mut st = Status::with_seeds(&g, &[0, 3, 7]);
        for _ in 0..6 {
            let next = advance_round(&g, &st, &[], &mut rng);
            next.validate(&g).unwrap();
            assert!(st.active_nodes().all(|u| next.is_active(u)));
            assert!(next.observed_count() >= st.observed_count());
            st = next;
        }
    }

    #[test]
    fn single_edge_expected_spread() {
        // Seed node 0 on 0 -> 1 with p = 0.5: expected final size 1.5.
        let g = edge_graph(0.5);
        let est = estimate_g_forward(&g, &Status::empty(&g), &[0], 1, 40_000, StreamKey::new(5));
        assert!((est - 1.5).abs() < 0.01, "est = {est}");
    }

    #[test]
    fn seeding_active_node_is_noop() {
        let g = edge_graph(0.5);
        let mut st = Status::empty(&g);
        st.activate(0);
        st.observe(0, false);
        let mut rng = StreamKey::new(6).rng();
        let after = advance_round(&g, &st, &[0], &mut rng);
        assert_eq!(after, st);
    }

    #[test]
    fn replay_matches_bounded_reach() {
        let g = crate::graph::generate_power_law(80, 2.3, 3.0, 11).unwrap();
        for s in 0..20 {
            let key = StreamKey::new(100 + s);
            let mut rng = key.rng();
            let real = LiveEdgeRealization::sample(&g, &Status::empty(&g), &mut rng);
            let seeds = [1, 5, 9];
            for t in 0..5 {
                let st = simulate_on_realization(&g, &Status::empty(&g), &seeds, t, &real);
                let reach = real.bounded_reach(&g, &seeds, t);
                let active: Vec<usize> = st.active_nodes().map(|u| u as usize).collect();
                let reached: Vec<usize> = reach.ones().collect();
                assert_eq!(active, reached, "t = {t}");
            }
        }
    }

    #[test]
    fn estimator_is_deterministic() {
        let g = crate::graph::generate_power_law(50, 2.5, 3.0, 13).unwrap();
        let st = Status::with_seeds(&g, &[2]);
        let a = estimate_g_forward(&g, &st, &[4], 3, 500, StreamKey::new(8));
        let b = estimate_g_forward(&g, &st, &[4], 3, 500, StreamKey::new(8));
        assert_eq!(a, b);
    }
}
