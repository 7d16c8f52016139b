//! `cscat`: contact geometry, scattering maps, two-body dynamics and
//! collision-invariant analysis for planar convex particles.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cscat", version, about = "Scattering of two identical convex planar particles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML file supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Exit with status 4 if the subcommand's consistency checks fail.
    #[arg(long, global = true)]
    check: bool,
    #[command(flatten)]
    flags: RunConfig,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Collision frame (d, p, q, n, N, r, Λ, γ) at a configuration.
    Contact,
    /// Scattering matrix at a configuration, optionally applied to a velocity.
    Scatter,
    /// Event-driven two-body simulation.
    Simulate,
    /// Reflection-group orbit coverage of an energy-momentum sphere.
    Orbit,
    /// Null space of the collision-invariant functional equation.
    Invariants,
    /// Search for a pre-collisional velocity fixed by the almost-physical map.
    Witness,
    /// Span rank of the sphere reflection normals over an orientation grid.
    Span,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl From<convex_scatter::Error> for CliError {
    fn from(e: convex_scatter::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let base = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let mut cfg = cli.flags.over(base);
    match cli.command {
        Command::Contact => commands::contact(&mut cfg, cli.check),
        Command::Scatter => commands::scatter(&mut cfg, cli.check),
        Command::Simulate => commands::simulate_cmd(&mut cfg, cli.check),
        Command::Orbit => commands::orbit(&mut cfg, cli.check),
        Command::Invariants => commands::invariants(&mut cfg, cli.check),
        Command::Witness => commands::witness(&mut cfg, cli.check),
        Command::Span => commands::span(&mut cfg, cli.check),
    }
}

fn exit_code(result: &Result<bool, CliError>) -> u8 {
    match result {
        Ok(true) => 0,
        Ok(false) => 4,
        Err(CliError::Config(_)) => 2,
        Err(CliError::Numerical(_)) => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = run(cli);
    match &result {
        Ok(false) => eprintln!("cscat: check failed"),
        Err(CliError::Config(m) | CliError::Numerical(m)) => eprintln!("cscat: {m}"),
        Ok(true) => {}
    }
    ExitCode::from(exit_code(&result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use convex_scatter::Error;

    #[test]
    fn library_errors_map_to_exit_codes() {
        let code = |e: Error| exit_code(&Err(e.into()));
        assert_eq!(code(Error::Domain("x".into())), 2);
        assert_eq!(code(Error::Shape("x".into())), 2);
        assert_eq!(code(Error::Contact { theta: 0.0, psi: 0.0, lo: 1.0, hi: 2.0 }), 3);
        assert_eq!(code(Error::IllConditioned("x".into())), 3);
        assert_eq!((exit_code(&Ok(true)), exit_code(&Ok(false))), (0, 4));
    }
}
