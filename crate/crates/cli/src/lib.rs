//! Command-line front end: configuration, orchestration and artifacts.
//!
//! Exit codes: 0 on success, 1 when a run completed but something was
//! flagged (a chain did not converge, an asserted check failed), 2 on any
//! configuration or I/O error.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{Overrides, RunConfig};
use crate::output::Outcome;

#[derive(Parser, Debug)]
#[command(name = "hexcross", version, about = "Spin-measure simulation and exact checks on the hexagonal lattice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Partition function and event probabilities by enumeration.
    Enumerate,
    /// Exact property check: fkg, cbc, cbc-factor, smp, complementarity,
    /// normalization or union-bound.
    Verify,
    /// Markov chain estimates with diagnostics.
    Sample,
    /// Crossing probabilities, exact below the cap and sampled above it.
    CrossingProb,
    /// Strip crossing densities along a rho schedule.
    StripDensity,
    /// Mixed-boundary push probes.
    PushProbe,
    /// Finite-size phase classification.
    PhaseScan,
    /// Tail of component volumes in an annulus.
    AnnulusVolumes,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Enumerate => "enumerate",
            Command::Verify => "verify",
            Command::Sample => "sample",
            Command::CrossingProb => "crossing-prob",
            Command::StripDensity => "strip-density",
            Command::PushProbe => "push-probe",
            Command::PhaseScan => "phase-scan",
            Command::AnnulusVolumes => "annulus-volumes",
        }
    }

    fn execute(self, cfg: &RunConfig, run_id: &str) -> anyhow::Result<Outcome> {
        match self {
            Command::Enumerate => commands::enumerate(cfg, run_id),
            Command::Verify => commands::verify(cfg, run_id),
            Command::Sample => commands::sample(cfg, run_id),
            Command::CrossingProb => commands::crossing_prob(cfg, run_id),
            Command::StripDensity => commands::strip_density_cmd(cfg, run_id),
            Command::PushProbe => commands::push_probe_cmd(cfg, run_id),
            Command::PhaseScan => commands::phase_scan(cfg, run_id),
            Command::AnnulusVolumes => commands::annulus_volumes(cfg, run_id),
        }
    }
}

pub const EXIT_FLAGGED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

fn execute(cli: &Cli, out: &mut dyn Write) -> anyhow::Result<bool> {
    let env_threads = std::env::var("HEXCROSS_THREADS").ok();
    let cfg = cli.overrides.resolve(cli.command.name(), env_threads.as_deref())?;
    let run_id = output::run_id(&cfg)?;
    let job = || -> anyhow::Result<Outcome> { cli.command.execute(&cfg, &run_id) };
    let outcome = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build()?.install(job)?,
        None => job()?,
    };
    output::emit(&cfg, &run_id, &outcome, out)?;
    Ok(outcome.flagged)
}

/// Runs the command line `argv` (program name first), writing the primary
/// artifact or the paths written to `out`.
pub fn run<I, T>(argv: I, out: &mut dyn Write) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(&cli, out) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(EXIT_FLAGGED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
