//! Experiment configuration: a TOML file with flat key-value sections, one
//! `[[policy]]` table per policy. Parsing resolves every default so the spec
//! embedded in output files is fully explicit.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use influence::graph::{generate_line_graph, generate_power_law, Graph, ProbModel};
use influence::policy::{
    make_k_filter_pattern, FfPolicy, ForesightConfig, GreedyPolicy, NonAdaptivePolicy,
    SeedingPolicy, SofPolicy, StaticPolicy,
};
use influence::rrset::SelectorConfig;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// Raw TOML shape.

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dataset: RawDataset,
    experiment: RawExperiment,
    #[serde(default)]
    policy: Vec<RawPolicy>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    artifact: Option<PathBuf>,
    edge_list: Option<PathBuf>,
    model: Option<String>,
    generator: Option<String>,
    n: Option<usize>,
    exponent: Option<f64>,
    avg_degree: Option<f64>,
    gen_seed: Option<u64>,
    big_n: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    horizon: u32,
    budget: u32,
    trials: u32,
    master_seed: u64,
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    kind: String,
    k_filter: Option<u32>,
    theta: Option<Vec<f64>>,
    samples: Option<u32>,
    g_samples: Option<u32>,
    selector: Option<String>,
    inner_selector: Option<String>,
}

// ---------------------------------------------------------------------------
// Resolved spec, embedded verbatim in every output file.

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSpec {
    Artifact { path: PathBuf },
    EdgeList { path: PathBuf, model: String },
    PowerLaw { n: usize, exponent: f64, avg_degree: f64, gen_seed: u64 },
    Line { big_n: u32 },
}

impl DatasetSpec {
    /// Short name for the results `dataset` column.
    pub fn label(&self) -> String {
        match self {
            DatasetSpec::Artifact { path } | DatasetSpec::EdgeList { path, .. } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
            DatasetSpec::PowerLaw { n, exponent, avg_degree, gen_seed } => {
                format!("power_law(n={n},exp={exponent},deg={avg_degree},seed={gen_seed})")
            }
            DatasetSpec::Line { big_n } => format!("line(N={big_n})"),
        }
    }

    pub fn load(&self, config_dir: &Path) -> Result<Graph> {
        match self {
            DatasetSpec::Artifact { path } => {
                crate::artifact::read_graph(&config_dir.join(path))
            }
            DatasetSpec::EdgeList { path, model } => {
                let full = config_dir.join(path);
                let text = std::fs::read_to_string(&full)
                    .with_context(|| format!("reading {}", full.display()))?;
                let graph = Graph::from_edge_list_str(&text, parse_model(model)?)
                    .with_context(|| format!("parsing {}", full.display()))?;
                Ok(graph)
            }
            DatasetSpec::PowerLaw { n, exponent, avg_degree, gen_seed } => {
                Ok(generate_power_law(*n, *exponent, *avg_degree, *gen_seed)?)
            }
            DatasetSpec::Line { big_n } => Ok(generate_line_graph(*big_n)?),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ResolvedPolicy {
    pub kind: String,
    /// Parameterization summary for the results `params` column.
    pub params: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_filter: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub samples: u32,
    pub g_samples: u32,
    pub selector: String,
    pub inner_selector: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ExperimentSpec {
    pub schema_version: u32,
    pub dataset: DatasetSpec,
    pub horizon: u32,
    pub budget: u32,
    pub trials: u32,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub policies: Vec<ResolvedPolicy>,
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str, config_dir: &Path) -> Result<ExperimentSpec> {
        let raw: RawConfig = toml::from_str(text).context("parsing experiment config")?;
        let dataset = resolve_dataset(&raw.dataset)?;
        if raw.experiment.horizon < 1 {
            bail!("horizon must be at least 1");
        }
        if raw.policy.is_empty() {
            bail!("config lists no policies");
        }
        let mut policies = Vec::new();
        for p in &raw.policy {
            policies.extend(resolve_policy(p, raw.experiment.horizon)?);
        }
        Ok(ExperimentSpec {
            schema_version: SCHEMA_VERSION,
            dataset,
            horizon: raw.experiment.horizon,
            budget: raw.experiment.budget,
            trials: raw.experiment.trials,
            master_seed: raw.experiment.master_seed,
            output_dir: config_dir.join(
                raw.experiment.output_dir.unwrap_or_else(|| PathBuf::from("out")),
            ),
            policies,
        })
    }

    pub fn from_toml_file(path: &Path) -> Result<ExperimentSpec> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml_str(&text, dir)
    }

    /// Single-line JSON of the whole resolved spec for file headers.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }
}

fn resolve_dataset(raw: &RawDataset) -> Result<DatasetSpec> {
    let sources =
        raw.artifact.is_some() as u8 + raw.edge_list.is_some() as u8 + raw.generator.is_some() as u8;
    if sources != 1 {
        bail!("dataset needs exactly one of: artifact, edge_list, generator");
    }
    if let Some(path) = &raw.artifact {
        return Ok(DatasetSpec::Artifact { path: path.clone() });
    }
    if let Some(path) = &raw.edge_list {
        let model = raw.model.clone().context("edge_list datasets need a model")?;
        parse_model(&model)?; // fail early
        return Ok(DatasetSpec::EdgeList { path: path.clone(), model });
    }
    match raw.generator.as_deref().unwrap() {
        "power_law" => Ok(DatasetSpec::PowerLaw {
            n: raw.n.context("power_law needs n")?,
            exponent: raw.exponent.unwrap_or(2.5),
            avg_degree: raw.avg_degree.unwrap_or(10.0),
            gen_seed: raw.gen_seed.unwrap_or(1),
        }),
        "line" => Ok(DatasetSpec::Line { big_n: raw.big_n.context("line needs big_n")? }),
        other => bail!("unknown generator '{other}' (try power_law or line)"),
    }
}

/// `wc` / `weighted_cascade`, `uniform:P`, or `explicit`.
pub fn parse_model(s: &str) -> Result<ProbModel> {
    match s {
        "wc" | "weighted_cascade" => Ok(ProbModel::WeightedCascade),
        "explicit" | "explicit_weights" => Ok(ProbModel::ExplicitWeights),
        other => {
            if let Some(p) = other.strip_prefix("uniform:") {
                let p: f64 = p.parse().with_context(|| format!("bad probability in --model {other}"))?;
                if !(p > 0.0 && p <= 1.0) {
                    bail!("--model uniform probability must lie in (0, 1], got {p}");
                }
                Ok(ProbModel::Uniform(p))
            } else {
                bail!("--model must be wc, uniform:P, or explicit (got '{other}')")
            }
        }
    }
}

/// `fixed:COUNT` or `adaptive:EPSILON:CONFIDENCE`.
pub fn parse_selector(s: &str) -> Result<SelectorConfig> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["fixed", count] => Ok(SelectorConfig::fixed(count.parse().context("bad fixed count")?)),
        ["adaptive", eps, conf] => Ok(SelectorConfig::adaptive(
            eps.parse().context("bad epsilon")?,
            conf.parse().context("bad confidence")?,
        )),
        _ => bail!("selector must be fixed:COUNT or adaptive:EPS:CONF (got '{s}')"),
    }
}

fn resolve_policy(raw: &RawPolicy, horizon: u32) -> Result<Vec<ResolvedPolicy>> {
    let selector = raw.selector.clone().unwrap_or_else(|| "fixed:500".into());
    parse_selector(&selector)?;
    let inner_selector = raw.inner_selector.clone().unwrap_or_else(|| "fixed:300".into());
    parse_selector(&inner_selector)?;
    let samples = raw.samples.unwrap_or(50);
    let g_samples = raw.g_samples.unwrap_or(10);
    let base = ResolvedPolicy {
        kind: raw.kind.clone(),
        params: String::new(),
        k_filter: None,
        theta: None,
        samples,
        g_samples,
        selector,
        inner_selector,
    };
    match raw.kind.as_str() {
        "nonadaptive" | "greedy" | "sof" => Ok(vec![base]),
        "static" => {
            let f = raw.k_filter.context("static policy needs k_filter")?;
            if f < 1 || f > horizon {
                bail!("k_filter must lie in 1..=horizon, got {f}");
            }
            Ok(vec![ResolvedPolicy {
                params: format!("k_filter={f}"),
                k_filter: Some(f),
                ..base
            }])
        }
        "ff" => {
            let thetas = raw.theta.clone().unwrap_or_else(|| vec![0.5]);
            if thetas.is_empty() {
                bail!("ff theta list must not be empty");
            }
            Ok(thetas
                .iter()
                .map(|&theta| ResolvedPolicy {
                    params: format!("theta={theta}"),
                    theta: Some(theta),
                    ..base.clone()
                })
                .collect())
        }
        other => bail!("unknown policy kind '{other}'"),
    }
}

/// Build the runnable policy for one resolved row.
pub fn instantiate(
    p: &ResolvedPolicy,
    horizon: u32,
    budget: u32,
) -> Result<Box<dyn SeedingPolicy>> {
    let selector = parse_selector(&p.selector)?;
    let foresight = ForesightConfig {
        samples: p.samples,
        g_samples: p.g_samples,
        theta: p.theta.unwrap_or(0.5),
        selector,
        inner_selector: parse_selector(&p.inner_selector)?,
        ..ForesightConfig::default()
    };
    Ok(match p.kind.as_str() {
        "nonadaptive" => Box::new(NonAdaptivePolicy { selector }),
        "greedy" => Box::new(GreedyPolicy { selector }),
        "static" => Box::new(StaticPolicy {
            pattern: make_k_filter_pattern(horizon, budget, p.k_filter.unwrap())?,
            selector,
        }),
        "sof" => Box::new(SofPolicy { cfg: foresight }),
        "ff" => Box::new(FfPolicy { cfg: foresight }),
        other => bail!("unknown policy kind '{other}'"),
    })
}
