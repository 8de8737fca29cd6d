mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::{Ctx, Preset};
use config::{ConfigError, RunConfig};

/// Dissipative spin-squeezing simulations for SiV centers in a phononic waveguide.
#[derive(Parser)]
#[command(name = "sivdicke", version)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override one config field; repeatable, later wins.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and write it as CSV.
    Evolve(Common),
    /// Solve for the steady state.
    Steady(Common),
    /// Steady states along one axis (r, gamma_dephase_ratio or n_spins).
    Sweep(Common),
    /// Emitter-emitter kernel for the configured placement.
    Kernel(Common),
    /// Single-center level structure.
    Siv(Common),
    /// Derivation chain from waveguide and drives to the effective model.
    Couple(Common),
    /// Both witnesses along an N=4 trajectory.
    Fig3(Common),
    /// Trajectories for several ensemble sizes.
    Fig4(Common),
    /// Trajectories from every symmetric starting state.
    Fig5(Common),
    /// Steady witness versus r for several ensemble sizes.
    Fig6(Common),
    /// Trajectories for given dephasing ratios (gamma_dephase_ratios required).
    Fig7(Common),
    /// Steady witness versus r for given dephasing ratios (gamma_dephase_ratios required).
    Fig8(Common),
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Core(siv_dicke::Error),
    Io(std::io::Error),
    Csv(csv::Error),
    Json(serde_json::Error),
    /// An emitted file failed its own consistency check.
    Validation(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        use siv_dicke::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::DimensionGuard { .. }) => 4,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(E::ComplexExpectation { .. } | E::InvalidState(_) | E::DimensionMismatch { .. }) => 3,
            CliError::Core(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config: {e}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io: {e}"),
            CliError::Csv(e) => write!(f, "csv: {e}"),
            CliError::Json(e) => write!(f, "json: {e}"),
            CliError::Validation(m) => write!(f, "output validation failed: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<siv_dicke::Error> for CliError {
    fn from(e: siv_dicke::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Csv(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Json(e)
    }
}

fn run(cmd: Command) -> Result<(), CliError> {
    let (name, common, preset) = match cmd {
        Command::Evolve(c) => ("evolve", c, None),
        Command::Steady(c) => ("steady", c, None),
        Command::Sweep(c) => ("sweep", c, None),
        Command::Kernel(c) => ("kernel", c, None),
        Command::Siv(c) => ("siv", c, None),
        Command::Couple(c) => ("couple", c, None),
        Command::Fig3(c) => ("fig3", c, Some(Preset::Fig3)),
        Command::Fig4(c) => ("fig4", c, Some(Preset::Fig4)),
        Command::Fig5(c) => ("fig5", c, Some(Preset::Fig5)),
        Command::Fig6(c) => ("fig6", c, Some(Preset::Fig6)),
        Command::Fig7(c) => ("fig7", c, Some(Preset::Fig7)),
        Command::Fig8(c) => ("fig8", c, Some(Preset::Fig8)),
    };
    let defaults = preset.as_ref().map_or(&[][..], Preset::defaults);
    let preset_name = preset.as_ref().map_or("none", Preset::name);
    let cfg = RunConfig::load(defaults, preset_name, common.config.as_deref(), &common.set)?;
    let mut ctx = Ctx::new(name, cfg, &common.out)?;
    match (name, &preset) {
        (_, Some(p)) => commands::preset(&mut ctx, p)?,
        ("evolve", _) => commands::evolve(&mut ctx)?,
        ("steady", _) => commands::steady(&mut ctx)?,
        ("sweep", _) => commands::sweep(&mut ctx)?,
        ("kernel", _) => commands::kernel(&mut ctx)?,
        ("siv", _) => commands::siv(&mut ctx)?,
        ("couple", _) => commands::couple(&mut ctx)?,
        _ => unreachable!("every subcommand is dispatched"),
    }
    ctx.finish()
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let code = match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
