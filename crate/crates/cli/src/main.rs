//! `slipstab`: command-line driver for the profile, spectral, dispersion,
//! base-flow, convergence, growth and envelope experiments.
//!
//! Exit status: 0 when every asserted invariant held, 2 when one failed,
//! 1 on a runtime error.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "slipstab", version, about = "Shear-flow instability and inviscid-limit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML file with one `[section]` per subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for randomized test functions.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Override a config key, `key=value`; repeatable.
    #[arg(long = "set", short = 's', global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Match a tanh profile to the slip coefficient and check admissibility.
    Profile,
    /// Negative spectrum of `-∂² - K`.
    Sturm,
    /// Dispersion curve of unstable Rayleigh modes.
    Dispersion,
    /// Base-flow heat equation and its drift window.
    Baseflow,
    /// Navier–Stokes to Euler convergence sweep.
    Converge,
    /// Growth of a seeded unstable mode in the rescaled frame.
    Grow,
    /// Grönwall-type envelope check.
    Envelope,
}

impl Command {
    fn section(self) -> &'static str {
        match self {
            Self::Profile => "profile",
            Self::Sturm => "sturm",
            Self::Dispersion => "dispersion",
            Self::Baseflow => "baseflow",
            Self::Converge => "converge",
            Self::Grow => "grow",
            Self::Envelope => "envelope",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> anyhow::Result<Vec<commands::Check>> {
        let table = settings::section(cli.config.as_deref(), cli.command.section(), &cli.overrides)?;
        std::fs::create_dir_all(&cli.out)?;
        let ctx = commands::Context { out: cli.out.clone(), seed: cli.seed };
        match cli.command {
            Command::Profile => commands::profile(&ctx, table),
            Command::Sturm => commands::sturm(&ctx, table),
            Command::Dispersion => commands::dispersion(&ctx, table),
            Command::Baseflow => commands::baseflow(&ctx, table),
            Command::Converge => commands::converge(&ctx, table),
            Command::Grow => commands::grow(&ctx, table),
            Command::Envelope => commands::envelope(&ctx, table),
        }
    };
    match run() {
        Ok(checks) => {
            for c in &checks {
                println!("{c}");
            }
            if checks.iter().all(|c| c.passed != Some(false)) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
