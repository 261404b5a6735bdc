//! Batch front-end: config files, one subcommand per experiment family,
//! deterministic parallel ensembles and data export with a run manifest.

mod commands;
mod config;
mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{execute, Outcome};
pub use config::{
    DynamicsSection, HeraldSection, OracleSection, RunConfig, RunSection, SimSection, SweepSection, WignerSection,
};
pub use manifest::{sha256_hex, RunManifest};

use crate::error::Error;

#[derive(Debug, Parser)]
#[command(name = "catqts", version, about = "Quantum-trajectory simulation of heralded cat-like cavity states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand; they override the config file.
#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trajectories: Option<usize>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Steady-state field: observables, F_SqVS and the averaged density matrix.
    Steady(CommonArgs),
    /// Heralded post-click states and their cat fidelities.
    Herald(CommonArgs),
    /// Post-click restoration with the interaction on and off.
    Dynamics(CommonArgs),
    /// Grid over β² and κτ_c.
    Sweep(CommonArgs),
    /// Wigner function of the heralded or steady state.
    Wigner(CommonArgs),
    /// Derived cavity parameters against the listed experimental sets.
    Table1(CommonArgs),
    /// Master-equation, relaxation and staggering checks.
    #[command(name = "oracle-check")]
    OracleCheck(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Steady(_) => "steady",
            Command::Herald(_) => "herald",
            Command::Dynamics(_) => "dynamics",
            Command::Sweep(_) => "sweep",
            Command::Wigner(_) => "wigner",
            Command::Table1(_) => "table1",
            Command::OracleCheck(_) => "oracle-check",
        }
    }

    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Steady(a)
            | Command::Herald(a)
            | Command::Dynamics(a)
            | Command::Sweep(a)
            | Command::Wigner(a)
            | Command::Table1(a)
            | Command::OracleCheck(a) => a,
        }
    }
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_ORACLE: u8 = 4;

/// Exit code for an error: 2 for bad input, 3 when a numerical contract
/// was violated, 1 for anything else (I/O, no heralds).
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. }
        | Error::InvalidParameter(_)
        | Error::InvalidCutoff(_)
        | Error::NoSteadyState(_)
        | Error::UnstableResonator { .. } => EXIT_CONFIG,
        Error::TailMass { .. }
        | Error::Positivity(_)
        | Error::StepContract(_)
        | Error::CorruptState(_)
        | Error::RegisterCap { .. }
        | Error::MemoryBudget { .. }
        | Error::DimensionCap { .. } => EXIT_NUMERICAL,
        Error::DimensionMismatch { .. }
        | Error::SlotOutOfRange { .. }
        | Error::VacuumSubtraction
        | Error::EmptyHeralds
        | Error::Io(_) => EXIT_FAILURE,
    }
}

/// Parses `argv`, runs the subcommand and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(outcome) => {
            for line in &outcome.report {
                println!("{line}");
            }
            if outcome.oracle_pass == Some(false) {
                eprintln!("catqts {}: oracle check failed", cli.command.name());
                EXIT_ORACLE
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("catqts {}: error: {e}", cli.command.name());
            exit_code(&e)
        }
    }
}
