//! `catenoid` — batch driver for the catenoid stability laboratory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Config;
use crate::error::CliResult;
use crate::output::Outputs;

#[derive(Debug, Parser)]
#[command(name = "catenoid", version, about = "Numerical experiments on the stability of the Lorentzian catenoid")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Profile, metric and |II|² tables with the height endpoint S.
    Geometry(commands::geometry::GeometryArgs),
    /// Sector eigentables and μ² against the shooting oracle.
    Spectrum(commands::spectrum::SpectrumArgs),
    /// Linear radial evolution with decay diagnostics.
    Evolve(commands::evolve::EvolveArgs),
    /// Codimension-one shooting for the unstable direction.
    Shoot(commands::shoot::ShootArgs),
    /// Null-frame, metric and single-valuedness checks of the foliation.
    FoliationCheck(commands::foliation::FoliationArgs),
    /// Aggregate DecayFit records from earlier runs.
    Report(commands::report::ReportArgs),
    /// Run the acceptance suite.
    Check(commands::check::CheckArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Geometry(_) => "geometry",
            Command::Spectrum(_) => "spectrum",
            Command::Evolve(_) => "evolve",
            Command::Shoot(_) => "shoot",
            Command::FoliationCheck(_) => "foliation-check",
            Command::Report(_) => "report",
            Command::Check(_) => "check",
        }
    }
}

fn execute(cli: &Cli) -> CliResult<bool> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    for pair in &cli.set {
        cfg.set_pair(pair)?;
    }
    let mut out = Outputs::new(&cli.out)?;
    let ok = match &cli.command {
        Command::Geometry(a) => commands::geometry::run(a, &mut cfg, &mut out)?,
        Command::Spectrum(a) => commands::spectrum::run(a, &mut cfg, &mut out)?,
        Command::Evolve(a) => commands::evolve::run(a, &mut cfg, &mut out)?,
        Command::Shoot(a) => commands::shoot::run(a, &mut cfg, &mut out)?,
        Command::FoliationCheck(a) => commands::foliation::run(a, &mut cfg, &mut out)?,
        Command::Report(a) => commands::report::run(a, &mut cfg, &mut out)?,
        Command::Check(a) => commands::check::run(a, &mut cfg, &mut out)?,
    };
    out.finish(cli.command.name(), cfg.resolved())?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{}: invariant or oracle check failed", cli.command.name());
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
