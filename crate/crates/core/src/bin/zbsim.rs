use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use zbsim::io::commands::{cmd_analytic, cmd_compare, cmd_dispersion, cmd_simulate, cmd_sweep, Outcome};
use zbsim::io::{load_run_config, load_sweep_spec};
use zbsim::Error;

/// Zitterbewegung in binary waveguide lattices with modulated gain and loss.
#[derive(Parser)]
#[command(name = "zbsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config, or a manifest.json to re-run.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
    /// Override a config key, e.g. `--set lattice.gain_ratio_r=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate the lattice and write the trajectory and intensity map.
    Simulate(Common),
    /// Evaluate the Dirac-model position expectation.
    Analytic(Common),
    /// Run both and score their agreement.
    Compare(Common),
    /// Sweep two parameters and map the pseudo-PT boundary.
    Sweep(Common),
    /// Tabulate the Bloch dispersion.
    Dispersion(Common),
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    match cli.command {
        Command::Sweep(c) => {
            let spec = load_sweep_spec(c.config.as_deref(), &c.overrides)?;
            cmd_sweep(&spec, &c.out)
        }
        Command::Simulate(c) => cmd_simulate(&load_run_config(c.config.as_deref(), &c.overrides)?, &c.out),
        Command::Analytic(c) => cmd_analytic(&load_run_config(c.config.as_deref(), &c.overrides)?, &c.out),
        Command::Compare(c) => cmd_compare(&load_run_config(c.config.as_deref(), &c.overrides)?, &c.out),
        Command::Dispersion(c) => cmd_dispersion(&load_run_config(c.config.as_deref(), &c.overrides)?, &c.out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Completed) => ExitCode::SUCCESS,
        Ok(Outcome::Diverged) => {
            eprintln!("zbsim: run diverged; partial output written");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("zbsim: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
