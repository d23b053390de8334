//! Command-line front end: `validate`, `run`, `bounds` and `preset`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::analysis::{bounds_report, verify_transitions, AnalysisError, BoundReport};
use crate::config::{load_config, ConfigError, RunConfig};
use crate::consensus::{run, ConsensusError};
use crate::graph::validate_topology;
use crate::output::{write_trace_files, TraceFiles};
use crate::presets;
use crate::signals::Round;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Simulation(#[from] ConsensusError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("writing trace files: {0}")]
    Io(#[from] std::io::Error),
    #[error("unknown preset `{0}` (available: {list})", list = presets::NAMES.join(", "))]
    UnknownPreset(String),
    #[error("either --config or --preset is required")]
    NoSource,
}

#[derive(Debug, Parser)]
#[command(
    name = "resdac",
    version,
    about = "Resilient dynamic average consensus simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the topology and configuration; nonzero exit on failure.
    Validate(Source),
    /// Run the protocol and write trace files.
    Run(RunArgs),
    /// Print the bound report for a run.
    Bounds(Overrides),
    /// Print a bundled scenario configuration.
    Preset { name: String },
}

#[derive(Debug, Clone, Args)]
pub struct Source {
    /// Configuration file.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Bundled scenario (scenario1, scenario2).
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct Overrides {
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub horizon: Option<Round>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    /// Output directory; defaults to the config's output_dir, then `resdac-out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the per-round transition matrices.
    #[arg(long)]
    pub emit_matrices: bool,
    /// Skip the SVG plot.
    #[arg(long)]
    pub no_plots: bool,
}

pub fn load_source(source: &Source) -> Result<RunConfig, CliError> {
    match (&source.config, &source.preset) {
        (Some(path), _) => Ok(load_config(path)?),
        (None, Some(name)) => presets::by_name(name)
            .ok_or_else(|| CliError::UnknownPreset(name.clone()))?
            .map_err(CliError::from),
        (None, None) => Err(CliError::NoSource),
    }
}

pub fn load_with_overrides(args: &Overrides) -> Result<RunConfig, CliError> {
    let mut cfg = load_source(&args.source)?;
    if let Some(seed) = args.seed {
        cfg.set_seed(seed);
    }
    if let Some(h) = args.horizon {
        cfg.set_horizon(h)?;
    }
    Ok(cfg)
}

/// Outcome of `validate`: whether it passed and the text to show.
pub struct Validation {
    pub passed: bool,
    pub text: String,
}

pub fn cmd_validate(source: &Source) -> Result<Validation, CliError> {
    match load_source(source) {
        Ok(cfg) => {
            let report = validate_topology(cfg.topology());
            Ok(Validation {
                passed: report.passed(),
                text: format!("{report}configuration valid\n"),
            })
        }
        Err(CliError::Config(ConfigError::Invalid { issues, report })) => {
            let mut text = report.map(|r| r.to_string()).unwrap_or_default();
            for issue in issues {
                text.push_str(&format!("error: {issue}\n"));
            }
            Ok(Validation {
                passed: false,
                text,
            })
        }
        Err(e) => Err(e),
    }
}

pub struct RunOutcome {
    pub files: TraceFiles,
    pub bounds: BoundReport,
    /// Rounds whose transition-matrix checks failed.
    pub failed_rounds: Vec<Round>,
}

pub fn cmd_run(
    cfg: &RunConfig,
    out: &Path,
    emit_matrices: bool,
    emit_plots: bool,
) -> Result<RunOutcome, CliError> {
    let trace = run(&cfg.simulation)?;
    let transitions = verify_transitions(&trace)?;
    let bounds = bounds_report(&cfg.simulation, &trace)?;
    let files = write_trace_files(
        out,
        &trace,
        &bounds,
        &transitions,
        emit_matrices,
        emit_plots,
    )?;
    let failed_rounds = transitions
        .iter()
        .filter(|(_, r)| !r.all_passed())
        .map(|(_, r)| r.t)
        .collect();
    Ok(RunOutcome {
        files,
        bounds,
        failed_rounds,
    })
}

pub fn cmd_bounds(cfg: &RunConfig) -> Result<BoundReport, CliError> {
    let trace = run(&cfg.simulation)?;
    Ok(bounds_report(&cfg.simulation, &trace)?)
}

fn execute(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Validate(source) => {
            let v = cmd_validate(&source)?;
            print!("{}", v.text);
            Ok(if v.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Run(args) => {
            let cfg = load_with_overrides(&args.overrides)?;
            let out = args
                .out
                .clone()
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("resdac-out"));
            let outcome = cmd_run(
                &cfg,
                &out,
                args.emit_matrices || cfg.emit_matrices,
                cfg.emit_plots && !args.no_plots,
            )?;
            println!("wrote {}", out.display());
            print!("{}", outcome.bounds.to_key_values());
            if outcome.failed_rounds.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!(
                    "transition checks failed in {} rounds (first: t={})",
                    outcome.failed_rounds.len(),
                    outcome.failed_rounds[0]
                );
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Bounds(args) => {
            let cfg = load_with_overrides(&args)?;
            let report = cmd_bounds(&cfg)?;
            print!("{}", report.to_key_values());
            if report.degenerate {
                println!("note=single good agent; envelope degenerate");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Preset { name } => {
            let text = presets::text(&name).ok_or(CliError::UnknownPreset(name))?;
            print!("{text}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
