//! `merton-cfd` command-line front end.

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use merton_cfd::VolMode;

use crate::commands::{Outcome, Task};
use crate::config::{load_file, ConfigLayer, Resolved};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VolArg {
    Constant,
    Local,
}

#[derive(Debug, Parser)]
#[command(name = "merton-cfd", version, about = "Compact finite-difference pricing of puts under Merton jump-diffusion")]
struct Cli {
    /// JSON config file, or a manifest written by an earlier run.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Number of spatial intervals (even).
    #[arg(long = "N", global = true)]
    intervals: Option<usize>,
    /// Number of time steps; derived from the mesh ratio when absent.
    #[arg(long = "M", global = true)]
    steps: Option<usize>,
    /// Half-width of the truncated log-price domain.
    #[arg(long = "L", global = true)]
    half_width: Option<f64>,
    /// Target dtau / dx^2.
    #[arg(long, global = true)]
    ratio: Option<f64>,
    #[arg(long, global = true, value_enum)]
    smooth: Option<Switch>,
    #[arg(long, global = true, value_enum)]
    vol: Option<VolArg>,
    /// Spot prices reported by the pricing commands.
    #[arg(long, global = true, value_delimiter = ',')]
    spots: Option<Vec<f64>>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Run independent solves one after another.
    #[arg(long, global = true)]
    sequential: bool,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    #[command(flatten)]
    Task(Task),
    /// Re-runs the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
    },
}

impl Cli {
    fn flag_layer(&self) -> ConfigLayer {
        ConfigLayer {
            intervals: self.intervals,
            steps: self.steps,
            half_width: self.half_width,
            ratio: self.ratio,
            smoothing: self.smooth.map(|s| matches!(s, Switch::On)),
            vol: self.vol.map(|v| match v {
                VolArg::Constant => VolMode::Constant,
                VolArg::Local => VolMode::Local,
            }),
            spots: self.spots.clone(),
            ..Default::default()
        }
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    let (task, file) = match &cli.command {
        Command::Task(task) => {
            let file = match &cli.config {
                Some(p) => load_file(p)?,
                None => ConfigLayer::default(),
            };
            (task.clone(), file)
        }
        Command::Replay { manifest } => {
            let text = std::fs::read_to_string(manifest)
                .with_context(|| format!("cannot read manifest {}", manifest.display()))?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .with_context(|| format!("invalid JSON in {}", manifest.display()))?;
            let task: Task = serde_json::from_value(serde_json::json!({
                "command": value["command"],
                "options": value["options"],
            }))
            .context("manifest does not record a known command")?;
            (task, load_file(manifest)?)
        }
    };
    // keep a later flag from changing step counts recorded in a file
    let mut file = file;
    if cli.intervals.is_some() || cli.ratio.is_some() || cli.half_width.is_some() {
        file.steps = None;
    }
    let layer = cli.flag_layer().over(file).over(ConfigLayer::defaults());
    let resolved = Resolved::from_layer(layer)?;
    tracing::debug!(?resolved, "resolved configuration");
    let exec = if cli.sequential {
        merton_cfd::Execution::Sequential
    } else {
        merton_cfd::Execution::default()
    };
    commands::execute(&task, &resolved, &cli.out, exec)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "warn" };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(level));
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).init();
    match run(cli) {
        Ok(Outcome::Passed) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
