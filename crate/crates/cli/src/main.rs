//! `betachain <command> --config <file.toml> --seed <u64> --out <dir>`
//!
//! Exit codes: 0 success, 1 i/o error, 2 configuration error (including a
//! direction function that fails the non-absorption check), 3 numeric
//! failure, 4 a verification check above its threshold. Every run that can
//! create its output directory leaves a `manifest.json` there, and every run
//! with a valid configuration also writes it back as canonical `config.toml`.

mod commands;
mod config;
mod error;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Manifest, Outputs, Status, Versions};

#[derive(Parser)]
#[command(name = "betachain", version, about = "Markov chains on [0, 1] with beta-distributed jump proportions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stationary density on a grid (`density.csv`, `density.json`).
    Density(RunArgs),
    /// Simulated trajectory (`trajectory.csv`).
    Simulate(RunArgs),
    /// Simulation fit, integral-equation residual and optional kernel oracle (`verify.json`).
    Verify(RunArgs),
    /// Boundary value solve for semidegenerate kernels (`bvp.csv`, `diagnostics.json`).
    Bvp(RunArgs),
    /// Two-axis coverage robot (`occupancy.csv`, `coverage.json`).
    Coverage(RunArgs),
    /// Sequential random search (`trace.csv`, `search.json`).
    Search(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Seed of all random streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

impl Command {
    fn split(&self) -> (&'static str, &RunArgs) {
        match self {
            Self::Density(a) => ("density", a),
            Self::Simulate(a) => ("simulate", a),
            Self::Verify(a) => ("verify", a),
            Self::Bvp(a) => ("bvp", a),
            Self::Coverage(a) => ("coverage", a),
            Self::Search(a) => ("search", a),
        }
    }
}

fn load(name: &str, args: &RunArgs) -> Result<RunConfig, CliError> {
    let config = RunConfig::load(&args.config)?;
    if config.command() != name {
        return Err(CliError::Config(format!(
            "{} describes a `{}` run, not `{name}`",
            args.config.display(),
            config.command()
        )));
    }
    Ok(config)
}

fn execute(config: &RunConfig, seed: u64, out: &mut Outputs) -> Result<commands::Checked, CliError> {
    match config {
        RunConfig::Density(c) => commands::density(c, out),
        RunConfig::Simulate(c) => commands::simulate_cmd(c, seed, out),
        RunConfig::Verify(c) => commands::verify(c, seed, out),
        RunConfig::Bvp(c) => commands::bvp(c, out),
        RunConfig::Coverage(c) => commands::coverage(c, seed, out),
        RunConfig::Search(c) => commands::search(c, seed, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = cli.command.split();
    let mut out = match Outputs::create(&args.out) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("betachain {name}: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let config = load(name, args).map_err(|e| match e {
        CliError::Config(m) => m,
        other => other.to_string(),
    });
    let result = match &config {
        Ok(c) => c
            .emit()
            .and_then(|text| out.write_with("config.toml", |w| w.write_all(text.as_bytes())))
            .and_then(|()| execute(c, args.seed, &mut out))
            .and_then(|checked| checked.map_err(CliError::Verification)),
        Err(m) => Err(CliError::Config(m.clone())),
    };
    let (status, code, message) = match &result {
        Ok(()) => (Status::Ok, 0, None),
        Err(e) => {
            let status = match e {
                CliError::Config(_) => Status::ConfigError,
                CliError::Numeric(_) => Status::NumericError,
                CliError::Verification(_) => Status::VerificationFailed,
                CliError::Io(_) => Status::IoError,
            };
            (status, e.exit_code(), Some(e.to_string()))
        }
    };
    let manifest = Manifest {
        tool: "betachain",
        versions: Versions::current(),
        command: name.to_string(),
        seed: args.seed,
        config: config.ok(),
        outputs: out.names().to_vec(),
        status,
        exit_code: code,
        message: message.clone(),
    };
    if let Err(e) = out.write_manifest(&manifest) {
        eprintln!("betachain {name}: cannot write manifest: {e}");
        return ExitCode::from(1);
    }
    match message {
        None => println!("betachain {name}: ok, wrote {} to {}", out.names().join(", "), args.out.display()),
        Some(m) => eprintln!("betachain {name}: {m}"),
    }
    ExitCode::from(code)
}
