//! `aspire` — simulate aspiration-learning dynamics on finite games,
//! estimate the induced pure-state Markov chain, and verify the
//! structural conditions the dynamics rely on.
//!
//! Exit codes: 0 all checks passed / run completed, 1 a check failed
//! or the run errored, 2 a check was inconclusive, 64 usage or
//! configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use aspire_cli::commands::{self, CmdError};
use aspire_cli::config;

const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "aspire",
    version,
    about = "Aspiration-learning dynamics on finite games",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Replace the config's run seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Replace the config's output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override a config key (dotted path), e.g. params.epsilon=0.001.
    /// Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structural conditions (coordination, symmetry,
    /// payoff separation) of the configured game.
    Verify(CommonArgs),
    /// Run the learning dynamics and report occupancy statistics.
    Simulate(CommonArgs),
    /// Estimate the pure-state transition matrix and its invariant
    /// distribution.
    Phat(CommonArgs),
    /// Re-run simulate or phat over a list of parameter values.
    Sweep(CommonArgs),
}

fn dispatch(command: &Command) -> Result<i32, CmdError> {
    let (name, args) = match command {
        Command::Verify(a) => ("verify", a),
        Command::Simulate(a) => ("simulate", a),
        Command::Phat(a) => ("phat", a),
        Command::Sweep(a) => ("sweep", a),
    };
    let eff = config::load_config(
        &args.config,
        &args.overrides,
        args.seed,
        args.out.as_deref(),
    )?;
    let prepared = commands::prepare(eff)?;
    match name {
        "verify" => commands::cmd_verify(&prepared),
        "simulate" => {
            commands::cmd_simulate(&prepared, &prepared.eff.config.output.dir, true)?;
            Ok(0)
        }
        "phat" => {
            commands::cmd_phat(&prepared, &prepared.eff.config.output.dir, true)?;
            Ok(0)
        }
        "sweep" => commands::cmd_sweep(&prepared),
        _ => unreachable!("subcommand names are fixed above"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help / --version are successful outcomes; everything
            // else is a usage error.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => ExitCode::from(u8::try_from(code).unwrap_or(1)),
        Err(CmdError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CmdError::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
