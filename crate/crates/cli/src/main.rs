use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kickrotor_cli::commands::{cmd_compare, cmd_first_return, cmd_reconstruct, cmd_simulate, cmd_validate};
use kickrotor_cli::{Format, Outcome, Overrides, RunConfig};

/// Cavity-coupled kicked rotor: simulate the transmission signal and rebuild
/// the phase portrait from it.
#[derive(Parser)]
#[command(name = "kickrotor", version)]
struct Cli {
    /// Flat TOML configuration (keys as in the README).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Kicks per trajectory.
    #[arg(long, global = true, value_name = "N")]
    kicks: Option<u64>,
    #[arg(long, global = true, value_name = "N")]
    trajectories: Option<usize>,
    /// Constant fluorescence probability per kick instead of the
    /// position-dependent one.
    #[arg(long = "g-override", global = true, value_name = "FLOAT")]
    g_override: Option<f64>,
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Output file format; `json` also switches reports to JSON.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report derived parameters and validity warnings.
    Validate,
    /// Write trajectory and transmission-series files for the ensemble.
    Simulate,
    /// Rebuild phase-space points from series files or directories.
    Reconstruct {
        #[arg(required = true)]
        series: Vec<PathBuf>,
    },
    /// Score reconstructions against ground truth and emit phase maps.
    Compare { truth: PathBuf, recon: PathBuf },
    /// Emit the (S_n, S_n+1) map of series files or directories.
    FirstReturn {
        #[arg(required = true)]
        series: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let over = Overrides {
        seed: cli.seed,
        kicks: cli.kicks,
        trajectories: cli.trajectories,
        g_override: cli.g_override,
        out: cli.out.clone(),
        format: cli.format,
    };
    let result = RunConfig::resolve(cli.config.as_deref(), &over).and_then(|cfg| {
        let outcome = match &cli.command {
            Command::Validate => cmd_validate(&cfg),
            Command::Simulate => cmd_simulate(&cfg),
            Command::Reconstruct { series } => cmd_reconstruct(&cfg, series),
            Command::Compare { truth, recon } => cmd_compare(&cfg, truth, recon),
            Command::FirstReturn { series } => cmd_first_return(&cfg, series),
        }?;
        Ok((cfg.format, outcome))
    });
    match result {
        Ok((format, outcome)) => {
            report(format, &outcome);
            ExitCode::from(outcome.status().exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn report(format: Format, outcome: &Outcome) {
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&outcome.json).expect("report serializes")),
        Format::Csv => print!("{}", outcome.text),
    }
}
