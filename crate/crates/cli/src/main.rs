use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use fedppg_cli::config::{parse_quality_map, ExperimentConfig};
use fedppg_cli::report::cmd_report;
use fedppg_cli::runner::{cmd_generate, cmd_run};

/// Federated camera-pulse simulation: generate synthetic subject datasets,
/// sweep FedAvg vs FedWeight across noise grids, and report the results.
#[derive(Parser)]
#[command(name = "fedppg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Config file (flat `key = value` lines, dotted sections).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. --set dataset.subjects=10 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Master seed (config key `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Noise target (config key `noise.target`).
    #[arg(long, value_parser = ["video", "label"])]
    noise_target: Option<String>,
    /// Comma-separated noise levels (config key `noise.levels`).
    #[arg(long)]
    levels: Option<String>,
    /// Comma-separated aggregation policies (config key `run.policies`).
    #[arg(long)]
    policies: Option<String>,
    /// Seeds per sweep cell (config key `run.repeats`).
    #[arg(long)]
    repeats: Option<usize>,
    /// Quality map (config key `federation.quality-map`).
    #[arg(long, value_parser = ["inverse", "maxminus", "literal"])]
    quality_map: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        for pair in &self.set {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| anyhow::anyhow!("--set expects KEY=VALUE, got `{pair}`"))?;
            config.set(key.trim(), value.trim())?;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(target) = &self.noise_target {
            config.set("noise.target", target)?;
        }
        if let Some(levels) = &self.levels {
            config.set("noise.levels", levels)?;
        }
        if let Some(policies) = &self.policies {
            config.set("run.policies", policies)?;
        }
        if let Some(repeats) = self.repeats {
            config.run.repeats = repeats;
        }
        if let Some(map) = &self.quality_map {
            config.federation.quality_map = parse_quality_map(map)?;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the clean synthetic dataset and a manifest.
    Generate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the noise sweep and write results.csv incrementally.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Reuse a dataset directory written by `generate` instead of
        /// generating in memory.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Summarize a results CSV into a markdown table and SVG chart.
    Report {
        /// Path to results.csv.
        csv: PathBuf,
        /// Output directory for report.md and mae_vs_noise.svg.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate { config, out } => {
            let config = config.resolve()?;
            let dir = cmd_generate(&config, &out)?;
            println!("dataset written to {}", dir.display());
        }
        Command::Run {
            config,
            out,
            dataset,
        } => {
            let config = config.resolve()?;
            let csv = cmd_run(&config, &out, dataset.as_deref())?;
            println!("results written to {}", csv.display());
        }
        Command::Report { csv, out } => {
            let (table, svg_path) = cmd_report(&csv, &out)?;
            print!("{table}");
            println!("chart written to {}", svg_path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let summary = serde_json::json!({ "error": format!("{err:#}") });
            eprintln!("{summary}");
            ExitCode::FAILURE
        }
    }
}
