//! `attrflow`: batch pipeline for attribute-conditioned flow
//! experiments on synthetic speaker embeddings.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 numerical
//! failure (divergent integration, non-finite loss, failed gradient
//! check).

use attrflow_cli::commands;
use attrflow_cli::config::RunConfig;
use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "attrflow", version, about = "Attribute-conditioned flow pipeline")]
struct Cli {
    /// Run configuration file (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the top-level seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic training and held-out datasets.
    Gen,
    /// Train the flow by maximum likelihood.
    Train,
    /// Apply the configured attribute shifts to held-out embeddings.
    Manipulate,
    /// Compute temporal deltas and correlation reports.
    Analyze,
    /// Check analytic gradients against finite differences.
    GradCheck {
        /// Maximum tolerated relative error per parameter.
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
}

fn load_config(cli: &Cli) -> attrflow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> attrflow::Result<()> {
    match &cli.command {
        Command::Gen => commands::cmd_gen(&load_config(cli)?),
        Command::Train => commands::cmd_train(&load_config(cli)?),
        Command::Manipulate => commands::cmd_manipulate(&load_config(cli)?),
        Command::Analyze => commands::cmd_analyze(&load_config(cli)?),
        Command::GradCheck { tolerance } => commands::cmd_grad_check(*tolerance),
    }
}

fn exit_code(error: &attrflow::Error) -> i32 {
    use attrflow::Error::*;
    match error {
        Integration { .. } | StepLimit { .. } | NonFinite { .. } | GradientCheck { .. } => 3,
        _ => 2,
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(error) = run(&cli) {
        eprintln!("error: {error}");
        std::process::exit(exit_code(&error));
    }
}
