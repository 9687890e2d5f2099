//! Subcommand implementations. Everything returns [`CliError`] so `main`
//! can map failures to exit codes: 1 for user errors, 2 for policy contract
//! violations detected by the process runner.

use std::path::Path;

use anyhow::{Context, Result};
use influence::graph::Graph;
use influence::oracle::{
    closed_form_ratio_limit, exact_optimal_nonadaptive, gap_closed_forms,
    simulate_line_adaptive_policy,
};
use influence::runner::{run_trials, ProcessConfig};
use influence::verify::verification_report;

use crate::artifact;
use crate::config::{instantiate, parse_model, ExperimentSpec};
use crate::csvio::{self, GapRow, ResultRow, TraceRow};

#[derive(Debug)]
pub enum CliError {
    /// Bad input, unreadable files, failed checks.
    User(anyhow::Error),
    /// A policy broke the seeding contract mid-run.
    Contract(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::User(_) => 1,
            CliError::Contract(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::User(e) => write!(f, "{e:#}"),
            CliError::Contract(msg) => write!(f, "contract violation: {msg}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::User(e)
    }
}

/// Parse an edge list, resolve probabilities, write the binary artifact.
pub fn cmd_ingest(input: &Path, model: &str, output: &Path) -> Result<(), CliError> {
    let model = parse_model(model)?;
    let text = std::fs::read_to_string(input)
        .with_context(|| format!("reading {}", input.display()))
        .map_err(CliError::User)?;
    let graph = Graph::from_edge_list_str(&text, model)
        .with_context(|| format!("parsing {}", input.display()))
        .map_err(CliError::User)?;
    artifact::write_graph(output, &graph)?;
    println!(
        "ingested {} -> {} ({} nodes, {} edges, {})",
        input.display(),
        output.display(),
        graph.node_count(),
        graph.edge_count(),
        graph.meta().prob_model
    );
    Ok(())
}

/// Run every policy of the spec and emit results + trace CSVs.
pub fn cmd_run(spec: &ExperimentSpec, config_dir: &Path) -> Result<(), CliError> {
    let graph = spec.dataset.load(config_dir)?;
    let cfg = ProcessConfig { horizon: spec.horizon, budget: spec.budget };
    let dataset = spec.dataset.label();
    let spec_json = spec.to_json_line();

    let mut results: Vec<ResultRow> = Vec::new();
    let mut traces: Vec<TraceRow> = Vec::new();
    for p in &spec.policies {
        let policy = instantiate(p, spec.horizon, spec.budget)?;
        // same master seed for every policy: paired trials
        let (summary, trials) = run_trials(&graph, policy.as_ref(), &cfg, spec.trials, spec.master_seed)
            .map_err(|e| CliError::Contract(format!("{} {}: {e}", p.kind, p.params)))?;
        println!(
            "{:<12} {:<12} mean {:8.3} +- {:.3} ({} trials, {:.2} ms/decision)",
            p.kind,
            p.params,
            summary.mean_influence,
            summary.ci95,
            summary.trials,
            summary.mean_decision_nanos / 1e6,
        );
        results.push(ResultRow {
            dataset: dataset.clone(),
            policy: p.kind.clone(),
            params: p.params.clone(),
            horizon: spec.horizon,
            budget: spec.budget,
            trials: spec.trials,
            mean_influence: summary.mean_influence,
            stddev: summary.stddev,
            ci95: summary.ci95,
            mean_wall_time_per_decision: summary.mean_decision_nanos / 1e9,
        });
        for trial in &trials {
            for step in &trial.steps {
                traces.push(TraceRow {
                    policy: p.kind.clone(),
                    params: p.params.clone(),
                    trial: trial.trial,
                    step: step.step,
                    cumulative_budget: step.spent_after,
                });
            }
        }
    }

    std::fs::create_dir_all(&spec.output_dir)
        .with_context(|| format!("creating {}", spec.output_dir.display()))
        .map_err(CliError::User)?;
    let results_path = spec.output_dir.join("results.csv");
    let traces_path = spec.output_dir.join("traces.csv");
    csvio::write_table(&results_path, &spec_json, csvio::RESULT_HEADERS, &results)?;
    csvio::write_table(&traces_path, &spec_json, csvio::TRACE_HEADERS, &traces)?;
    println!("wrote {} and {}", results_path.display(), traces_path.display());
    Ok(())
}

/// Closed forms, simulation, and exhaustive search for the line family.
pub fn cmd_gap(ns: &[u32], trials: u32, seed: u64, output: &Path) -> Result<(), CliError> {
    let mut rows: Vec<GapRow> = Vec::new();
    for &n in ns {
        if n < 2 {
            return Err(CliError::User(anyhow::anyhow!("line construction needs N >= 2, got {n}")));
        }
        let inst = gap_closed_forms(n);
        // simulation walks 2N rounds per trial; exhaustive search enumerates
        // 2^(2N) edge masks -- both only at desk scale
        let sim = if n <= 50 && trials > 0 {
            Some(simulate_line_adaptive_policy(n, trials, seed ^ n as u64))
        } else {
            None
        };
        let exhaustive = if n <= 8 {
            let graph = influence::graph::generate_line_graph(n).map_err(anyhow::Error::from)?;
            Some(
                exact_optimal_nonadaptive(&graph, inst.horizon, inst.budget)
                    .map_err(anyhow::Error::from)?
                    .1,
            )
        } else {
            None
        };
        println!(
            "N={n}: adaptive {:.6}, non-adaptive {:.6}, ratio {:.6}{}",
            inst.delta_ad,
            inst.delta_nonad,
            inst.ratio,
            sim.as_ref()
                .map(|s| format!(", simulated {:.4} +- {:.4}", s.mean, 1.96 * s.stderr))
                .unwrap_or_default()
        );
        rows.push(GapRow {
            big_n: n,
            p: inst.p,
            horizon: inst.horizon,
            budget: inst.budget,
            delta_adaptive: inst.delta_ad,
            delta_nonadaptive: inst.delta_nonad,
            ratio: inst.ratio,
            ratio_limit: closed_form_ratio_limit(),
            sim_adaptive_mean: sim.as_ref().map(|s| s.mean),
            sim_stderr: sim.as_ref().map(|s| s.stderr),
            sim_trials: sim.as_ref().map(|s| s.trials),
            exhaustive_nonadaptive: exhaustive,
        });
    }
    let spec_json = serde_json::to_string(&serde_json::json!({
        "big_n": ns, "trials": trials, "master_seed": seed,
    }))
    .expect("json");
    csvio::write_table(output, &spec_json, csvio::GAP_HEADERS, &rows)?;
    println!("wrote {}", output.display());
    Ok(())
}

/// Oracle-backed self-checks; `full` runs the acceptance-scale tier.
pub fn cmd_verify(full: bool, seed: u64) -> Result<(), CliError> {
    let tier = if full { "full" } else { "quick" };
    println!("running {tier} verification (seed {seed})");
    let report = verification_report(full, seed);
    let mut failures = 0;
    for check in &report {
        println!("{}", check.line());
        if !check.passed {
            failures += 1;
        }
    }
    if failures > 0 {
        Err(CliError::User(anyhow::anyhow!("{failures} of {} checks failed", report.len())))
    } else {
        println!("all {} checks passed", report.len());
        Ok(())
    }
}
