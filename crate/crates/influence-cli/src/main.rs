use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use influence_cli::commands::{cmd_gap, cmd_ingest, cmd_run, cmd_verify};
use influence_cli::config::ExperimentSpec;

#[derive(Parser)]
#[command(
    name = "influence",
    about = "Adaptive seeding experiments on independent-cascade graphs",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse an edge list and write a binary graph artifact.
    Ingest {
        /// Edge list: one `source target [weight]` pair per line.
        input: PathBuf,
        /// Probability model: wc, uniform:P, or explicit.
        #[arg(long)]
        model: String,
        /// Artifact path to write.
        #[arg(long)]
        output: PathBuf,
    },
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Closed forms, simulation, and exhaustive search for the adaptivity
    /// gap on the line family.
    Gap {
        /// Comma-separated list of N values.
        #[arg(long = "big-n", value_delimiter = ',')]
        big_n: Vec<u32>,
        #[arg(long, default_value_t = 100_000)]
        trials: u32,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value = "gap.csv")]
        output: PathBuf,
    },
    /// Self-checks against the exact oracles.
    Verify {
        /// Run the acceptance-scale tier instead of the quick one.
        #[arg(long)]
        full: bool,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Ingest { input, model, output } => cmd_ingest(&input, &model, &output),
        Cmd::Run { config, output_dir } => ExperimentSpec::from_toml_file(&config)
            .map_err(Into::into)
            .and_then(|mut spec| {
                if let Some(dir) = output_dir {
                    spec.output_dir = dir;
                }
                let parent = config.parent().map(PathBuf::from).unwrap_or_default();
                cmd_run(&spec, &parent)
            }),
        Cmd::Gap { big_n, trials, seed, output } => cmd_gap(&big_n, trials, seed, &output),
        Cmd::Verify { full, seed } => cmd_verify(full, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
