//! Drives a whole seeding process: `horizon` rounds, one policy decision
//! before each round, with budget accounting and contract checks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::diffusion::{advance_round, Status};
use crate::graph::{Graph, NodeId};
use crate::policy::{PolicyState, SeedingPolicy};
use crate::rng::{purpose, StreamKey};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessConfig {
    pub horizon: u32,
    pub budget: u32,
}

/// A policy broke the rules of the process. These are programming errors in
/// the policy, not recoverable conditions, and abort the run.
#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error("step {step}: policy returned {got} seeds with only {remaining} budget left")]
    BudgetExceeded { step: u32, got: usize, remaining: u32 },
    #[error("step {step}: seed {seed} is not a seedable node (active, duplicate, or out of range)")]
    BadSeed { step: u32, seed: NodeId },
}

/// One decision plus the round that followed it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u32,
    /// Rounds remaining at decision time (horizon down to 1).
    pub t_remaining: u32,
    /// Whether the observed status was final when the policy decided.
    pub was_final: bool,
    pub seeds: Vec<NodeId>,
    pub spent_after: u32,
    pub active_after: u32,
    pub decision_nanos: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: u32,
    pub influence: u32,
    pub steps: Vec<StepRecord>,
}

/// Aggregates over trials. All statistics derive from integer sums, so they
/// are identical across repeat runs and thread counts; only the wall-clock
/// fields vary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub trials: u32,
    pub mean_influence: f64,
    pub stddev: f64,
    pub ci95: f64,
    pub mean_decision_nanos: f64,
    pub mean_spent: f64,
}

fn check_decision(
    graph: &Graph,
    status: &Status,
    seeds: &[NodeId],
    remaining: u32,
    step: u32,
) -> Result<(), RunnerError> {
    if seeds.len() > remaining as usize {
        return Err(RunnerError::BudgetExceeded { step, got: seeds.len(), remaining });
    }
    for (i, &s) in seeds.iter().enumerate() {
        let in_range = (s as usize) < graph.node_count();
        let fresh = in_range && !status.is_active(s) && !seeds[..i].contains(&s);
        if !fresh {
            return Err(RunnerError::BadSeed { step, seed: s });
        }
    }
    Ok(())
}

/// Run one trial: `horizon` decision/diffusion steps from an empty status.
pub fn run_seeding_process(
    graph: &Graph,
    policy: &dyn SeedingPolicy,
    cfg: &ProcessConfig,
    trial: u32,
    trial_key: StreamKey,
) -> Result<TrialResult, RunnerError> {
    let mut status = Status::empty(graph);
    let mut remaining = cfg.budget;
    let mut steps = Vec::with_capacity(cfg.horizon as usize);
    for step in 1..=cfg.horizon {
        let t_remaining = cfg.horizon - step + 1;
        let was_final = status.is_final(graph);
        let state = PolicyState { status: &status, t: t_remaining, k: remaining, step_index: step };
        let step_key = trial_key.child(step as u64);
        let started = Instant::now();
        let decision = policy.decide(graph, &state, step_key.child(purpose::DECIDE));
        let decision_nanos = started.elapsed().as_nanos() as u64;
        check_decision(graph, &status, &decision.seeds, remaining, step)?;
        remaining -= decision.seeds.len() as u32;
        let mut rng = step_key.child(purpose::DIFFUSE).rng();
        status = advance_round(graph, &status, &decision.seeds, &mut rng);
        steps.push(StepRecord {
            step,
            t_remaining,
            was_final,
            seeds: decision.seeds,
            spent_after: cfg.budget - remaining,
            active_after: status.active_count() as u32,
            decision_nanos,
        });
    }
    Ok(TrialResult { trial, influence: status.active_count() as u32, steps })
}

/// Run `trials` independent trials and summarize. Trials are parallel; all
/// randomness is keyed off `master_seed` per trial and step, so results do
/// not depend on scheduling.
pub fn run_trials(
    graph: &Graph,
    policy: &dyn SeedingPolicy,
    cfg: &ProcessConfig,
    trials: u32,
    master_seed: u64,
) -> Result<(RunSummary, Vec<TrialResult>), RunnerError> {
    let root = StreamKey::new(master_seed);
    let results: Vec<TrialResult> = (0..trials)
        .into_par_iter()
        .map(|trial| run_seeding_process(graph, policy, cfg, trial, root.child(trial as u64)))
        .collect::<Result<_, _>>()?;
    let mut sum = 0u64;
    let mut sum_sq = 0u64;
    let mut nanos = 0u64;
    let mut decisions = 0u64;
    let mut spent = 0u64;
    for r in &results {
        sum += r.influence as u64;
        sum_sq += (r.influence as u64) * (r.influence as u64);
        spent += r.steps.last().map_or(0, |s| s.spent_after as u64);
        for s in &r.steps {
            nanos += s.decision_nanos;
            decisions += 1;
        }
    }
    let nf = trials.max(1) as f64;
    let mean = sum as f64 / nf;
    let var = if trials > 1 {
        (sum_sq as f64 - nf * mean * mean).max(0.0) / (nf - 1.0)
    } else {
        0.0
    };
    let stddev = var.sqrt();
    let ci95 = 1.96 * stddev / nf.sqrt();
    let summary = RunSummary {
        trials,
        mean_influence: mean,
        stddev,
        ci95,
        mean_decision_nanos: nanos as f64 / decisions.max(1) as f64,
        mean_spent: spent as f64 / nf,
    };
    Ok((summary, results))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ProbModel;
    use crate::policy::{
        make_k_filter_pattern, GreedyPolicy, NonAdaptivePolicy, PolicyDecision, StaticPolicy,
    };
    use crate::rrset::SelectorConfig;

    struct OverspendPolicy;

    impl SeedingPolicy for OverspendPolicy {
        fn name(&self) -> String {
            "overspend".into()
        }
        fn decide(&self, graph: &Graph, state: &PolicyState, _key: StreamKey) -> PolicyDecision {
            let want = state.k as usize + 1;
            let seeds = (0..graph.node_count() as NodeId).take(want).collect();
            PolicyDecision { seeds, trace: crate::policy::DecisionTrace::None }
        }
    }

    struct ReseedActivePolicy;

    impl SeedingPolicy for ReseedActivePolicy {
        fn name(&self) -> String {
            "reseed".into()
        }
        fn decide(&self, _graph: &Graph, _state: &PolicyState, _key: StreamKey) -> PolicyDecision {
            PolicyDecision { seeds: vec![0], trace: crate::policy::DecisionTrace::None }
        }
    }

    #[test]
    fn contract_violations_abort() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2)], ProbModel::Uniform(0.5)).unwrap();
        let cfg = ProcessConfig { horizon: 2, budget: 1 };
        let err = run_seeding_process(&g, &OverspendPolicy, &cfg, 0, StreamKey::new(1));
        assert!(matches!(err, Err(RunnerError::BudgetExceeded { step: 1, got: 2, remaining: 1 })));
        // seeding node 0 twice: fine at step 1, active at step 2
        let cfg = ProcessConfig { horizon: 2, budget: 5 };
        let err = run_seeding_process(&g, &ReseedActivePolicy, &cfg, 0, StreamKey::new(1));
        assert!(matches!(err, Err(RunnerError::BadSeed { step: 2, seed: 0 })));
    }

    #[test]
    fn static_spend_tracks_pattern_and_stops_at_budget() {
        let g = crate::graph::generate_power_law(40, 2.5, 3.0, 3).unwrap();
        let pattern = make_k_filter_pattern(4, 7, 2).unwrap(); // (3, 0, 3, 1)
        let policy = StaticPolicy { pattern, selector: SelectorConfig::fixed(300) };
        let cfg = ProcessConfig { horizon: 4, budget: 7 };
        let r = run_seeding_process(&g, &policy, &cfg, 0, StreamKey::new(4)).unwrap();
        let spends: Vec<u32> = r.steps.iter().map(|s| s.seeds.len() as u32).collect();
        assert_eq!(spends, vec![3, 0, 3, 1]);
        assert_eq!(r.steps.last().unwrap().spent_after, 7);
        let ts: Vec<u32> = r.steps.iter().map(|s| s.t_remaining).collect();
        assert_eq!(ts, vec![4, 3, 2, 1]);
    }

    #[test]
    fn deterministic_process_gives_exact_influence() {
        // path with p = 1: one seed floods everything reachable in time
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)], ProbModel::Uniform(1.0)).unwrap();
        let policy = NonAdaptivePolicy { selector: SelectorConfig::fixed(200) };
        let cfg = ProcessConfig { horizon: 2, budget: 1 };
        let (summary, results) = run_trials(&g, &policy, &cfg, 20, 7).unwrap();
        assert_eq!(summary.mean_influence, 3.0);
        assert_eq!(summary.stddev, 0.0);
        assert!(results.iter().all(|r| r.influence == 3));
    }

    #[test]
    fn summaries_are_reproducible() {
        let g = crate::graph::generate_power_law(60, 2.5, 4.0, 9).unwrap();
        let policy = GreedyPolicy { selector: SelectorConfig::fixed(300) };
        let cfg = ProcessConfig { horizon: 3, budget: 2 };
        let (s1, r1) = run_trials(&g, &policy, &cfg, 30, 11).unwrap();
        let (s2, r2) = run_trials(&g, &policy, &cfg, 30, 11).unwrap();
        assert_eq!(s1.mean_influence, s2.mean_influence);
        assert_eq!(s1.stddev, s2.stddev);
        let inf1: Vec<u32> = r1.iter().map(|r| r.influence).collect();
        let inf2: Vec<u32> = r2.iter().map(|r| r.influence).collect();
        assert_eq!(inf1, inf2);
        let (s3, _) = run_trials(&g, &policy, &cfg, 30, 12).unwrap();
        assert_ne!(s1.mean_influence, s3.mean_influence);
    }

    #[test]
    fn policies_are_consulted_even_with_zero_budget() {
        let g = Graph::from_edges(3, &[(0, 1)], ProbModel::Uniform(0.5)).unwrap();
        let policy = GreedyPolicy { selector: SelectorConfig::fixed(100) };
        let cfg = ProcessConfig { horizon: 3, budget: 0 };
        let r = run_seeding_process(&g, &policy, &cfg, 0, StreamKey::new(5)).unwrap();
        assert_eq!(r.steps.len(), 3);
        assert_eq!(r.influence, 0);
    }
}
