use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use bsde_lab::config::{parse_config, ExperimentConfig, ExperimentKind};
use bsde_lab::output::RunStatus;
use bsde_lab::run::{default_output_dir, run};
use clap::{Args, Parser, Subcommand};

/// Monte-Carlo experiments on backward stochastic differential equations.
#[derive(Debug, Parser)]
#[command(name = "bsde-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Debug, Args)]
struct Global {
    /// Experiment description in TOML; every key has a default.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the master seed of the config.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    /// Output directory (default: the config's output_dir, else out/<experiment>).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Suppress the per-check summary.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Solve one model with the configured schemes and compare against the closed form.
    Solve,
    /// Run the integrability and Lipschitz certificate.
    Certify,
    /// Record Picard increments and check their envelopes.
    Contract,
    /// Solve an ordered pair of equations and test the comparison property.
    Compare,
    /// Constant chain and contraction factor checks.
    Bounds,
    /// Side-by-side parameter thresholds.
    Table,
}

impl Command {
    fn kind(self) -> ExperimentKind {
        match self {
            Command::Solve => ExperimentKind::Solve,
            Command::Certify => ExperimentKind::Certify,
            Command::Contract => ExperimentKind::Contract,
            Command::Compare => ExperimentKind::Compare,
            Command::Bounds => ExperimentKind::Bounds,
            Command::Table => ExperimentKind::Table,
        }
    }
}

fn load(global: &Global) -> Result<ExperimentConfig> {
    let mut cfg = match &global.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_config(&text).with_context(|| format!("invalid config {}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let kind = cli.command.kind();
    let cfg = match load(&cli.global) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(RunStatus::Error.exit_code() as u8);
        }
    };
    let dir = cli.global.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| default_output_dir(kind));
    let manifest = match run(kind, &cfg, &dir) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(RunStatus::Error.exit_code() as u8);
        }
    };
    if !cli.global.quiet {
        for c in &manifest.checks {
            println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        println!("{kind}: {:?}, outputs in {}", manifest.status, dir.display());
    }
    if let Some(err) = &manifest.error {
        eprintln!("error: {err}");
    }
    ExitCode::from(manifest.status.exit_code() as u8)
}
