//! `levystop` — one-sided optimal stopping for Lévy processes with
//! polynomial rewards: solve for the threshold and value function, tabulate
//! them, and validate against first-passage Monte Carlo.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{cmd_mc, cmd_solve, cmd_table, exit_code, McMode};
use config::ProblemConfig;

#[derive(Parser)]
#[command(
    name = "levystop",
    version,
    about = "One-sided optimal stopping solver for Lévy processes with polynomial rewards"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the threshold x*, the value function, and the verification
    /// report. Exit codes: 0 certified, 2 not certified, 3 invalid config,
    /// 4 numerical failure.
    Solve {
        /// Problem description (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Write the machine-readable solution document (JSON) here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit a CSV table of x, g(x), V(x), V - g over a grid.
    Table {
        #[arg(long)]
        config: PathBuf,
        /// Grid start (falls back to the config's grid block).
        #[arg(long)]
        from: Option<f64>,
        /// Grid end.
        #[arg(long)]
        to: Option<f64>,
        /// Grid spacing.
        #[arg(long)]
        step: Option<f64>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo validation of the solution. Exit code 5 when a
    /// three-sigma check fails.
    Mc {
        #[arg(long)]
        config: PathBuf,
        /// value: estimate V(x0) against the closed form; identity: check the
        /// fluctuation identity at a = x*; sweep: compare thresholds x*, x* +- 0.5.
        #[arg(long, value_enum)]
        mode: Mode,
        /// Override the seed from the config's mc block.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the path count from the config's mc block.
        #[arg(long)]
        paths: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Value,
    Identity,
    Sweep,
}

fn load_config(path: &PathBuf) -> Result<ProblemConfig, commands::CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| commands::CliError {
        code: exit_code::BAD_CONFIG,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    ProblemConfig::from_toml(&text).map_err(Into::into)
}

fn run(cli: Cli) -> Result<i32, commands::CliError> {
    match cli.command {
        Command::Solve { config, out } => {
            let cfg = load_config(&config)?;
            cmd_solve(&cfg, out.as_deref())
        }
        Command::Table {
            config,
            from,
            to,
            step,
            out,
        } => {
            let cfg = load_config(&config)?;
            cmd_table(&cfg, from, to, step, out.as_deref())
        }
        Command::Mc {
            config,
            mode,
            seed,
            paths,
        } => {
            let cfg = load_config(&config)?;
            let mode = match mode {
                Mode::Value => McMode::Value,
                Mode::Identity => McMode::Identity,
                Mode::Sweep => McMode::Sweep,
            };
            cmd_mc(&cfg, mode, seed, paths)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => exit_code::BAD_CONFIG,
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
