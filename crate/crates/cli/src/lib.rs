//! Command-line front end: argument parsing, configuration resolution and
//! the subcommands.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::JobConfig;

#[derive(Debug, Parser)]
#[command(
    name = "hdmdc",
    version,
    about = "Hankel DMD with control: sweeps, ensemble forecasts and PDF comparisons"
)]
pub struct Cli {
    /// Job configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; must exist.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic runs and a manifest.
    Synth,
    /// Full-factorial hyperparameter sweep.
    Sweep,
    /// Train and save one model per training run.
    Fit,
    /// Forecast test sequences (deterministic, bayesian or frequentist).
    Forecast,
    /// Compare bootstrap densities of two sets of files.
    PdfCompare {
        /// Channels to compare; overrides `pdf.channels`.
        #[arg(long, num_args = 1..)]
        channels: Vec<String>,
        /// Files of source A; overrides `pdf.source_a`.
        #[arg(long = "source-a", num_args = 1..)]
        source_a: Vec<PathBuf>,
        /// Files of source B; overrides `pdf.source_b`.
        #[arg(long = "source-b", num_args = 1..)]
        source_b: Vec<PathBuf>,
    },
}

/// Merges the config file with command-line overrides and absolutizes paths.
pub fn resolve_config(cli: &Cli) -> Result<JobConfig> {
    let mut cfg = match &cli.config {
        Some(p) => JobConfig::load(p)?,
        None => JobConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if let Command::PdfCompare {
        channels,
        source_a,
        source_b,
    } = &cli.command
    {
        if !channels.is_empty() {
            cfg.pdf.channels = channels.clone();
        }
        if !source_a.is_empty() {
            cfg.pdf.source_a = source_a.clone();
        }
        if !source_b.is_empty() {
            cfg.pdf.source_b = source_b.clone();
        }
    }
    cfg.absolutize()?;
    Ok(cfg)
}

pub fn run(command: &Command, cfg: &JobConfig) -> Result<()> {
    match command {
        Command::Synth => commands::cmd_synth(cfg),
        Command::Sweep => commands::cmd_sweep(cfg).map(|_| ()),
        Command::Fit => commands::cmd_fit(cfg).map(|_| ()),
        Command::Forecast => commands::cmd_forecast(cfg).map(|_| ()),
        Command::PdfCompare { .. } => commands::cmd_pdf_compare(cfg).map(|_| ()),
    }
}
