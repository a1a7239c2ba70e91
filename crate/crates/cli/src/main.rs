//! `oscbc`: experiments on oscillating Dirichlet data.

mod commands;
mod config;
mod error;
mod output;
mod parse;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

use commands::*;
use config::{merge, ConfigFile};
use error::{CliError, CliResult};
use output::Output;

#[derive(Debug, Parser)]
#[command(
    name = "oscbc",
    version,
    about = "Homogenized boundary data for oscillating Dirichlet problems"
)]
struct Cli {
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory receiving the artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// TOML file with one section per subcommand; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Discrepancy of the rotation sequence frac(j x).
    Discrepancy(DiscrepancyArgs),
    /// Lattice points near a hyperplane against an exhaustive search.
    Lattice(LatticeArgs),
    /// Homogenized boundary value for one direction.
    Cell(CellArgs),
    /// Boundary table over many directions.
    Sweep(SweepArgs),
    /// Exponent of the singular solution in a cone.
    Beta0(Beta0Args),
    /// Convergence of the oscillating problem to its homogenized limit.
    Epsilon(EpsilonArgs),
    /// Fast invariant suite.
    Verify(VerifyArgs),
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Discrepancy(_) => "discrepancy",
            Cmd::Lattice(_) => "lattice",
            Cmd::Cell(_) => "cell",
            Cmd::Sweep(_) => "sweep",
            Cmd::Beta0(_) => "beta0",
            Cmd::Epsilon(_) => "epsilon",
            Cmd::Verify(_) => "verify",
        }
    }
}

/// Replaces each subcommand's arguments by their merge with the config section.
fn apply_config(
    cmd: Cmd,
    file: &ConfigFile,
    root: &clap::Command,
    matches: &clap::ArgMatches,
) -> CliResult<Cmd> {
    let name = cmd.name();
    let sub = root.find_subcommand(name).expect("declared subcommand");
    let sub_matches = matches.subcommand_matches(name).expect("parsed subcommand");
    let section = file.section(name);
    Ok(match cmd {
        Cmd::Discrepancy(a) => Cmd::Discrepancy(merge(a, sub, sub_matches, section)?),
        Cmd::Lattice(a) => Cmd::Lattice(merge(a, sub, sub_matches, section)?),
        Cmd::Cell(a) => Cmd::Cell(merge(a, sub, sub_matches, section)?),
        Cmd::Sweep(a) => Cmd::Sweep(merge(a, sub, sub_matches, section)?),
        Cmd::Beta0(a) => Cmd::Beta0(merge(a, sub, sub_matches, section)?),
        Cmd::Epsilon(a) => Cmd::Epsilon(merge(a, sub, sub_matches, section)?),
        Cmd::Verify(a) => Cmd::Verify(merge(a, sub, sub_matches, section)?),
    })
}

fn execute(cmd: &Cmd, out: &mut Output) -> CliResult<String> {
    match cmd {
        Cmd::Discrepancy(a) => run_discrepancy(a, out),
        Cmd::Lattice(a) => run_lattice(a, out),
        Cmd::Cell(a) => run_cell(a, out),
        Cmd::Sweep(a) => run_sweep(a, out),
        Cmd::Beta0(a) => run_beta0(a, out),
        Cmd::Epsilon(a) => run_epsilon(a, out),
        Cmd::Verify(a) => run_verify(a, out),
    }
}

fn run() -> CliResult<()> {
    let root = Cli::command();
    let matches = match root.clone().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Ok(()),
                _ => Err(CliError::Validation(String::new())),
            };
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Validation(e.to_string()))?;
    let command = match &cli.config {
        Some(path) => apply_config(cli.command, &ConfigFile::load(path)?, &root, &matches)?,
        None => cli.command,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Validation("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Solver(e.to_string()))?;
    let mut out = Output::new(&cli.out)?;
    let summary = pool.install(|| execute(&command, &mut out))?;
    let mut stdout = std::io::stdout().lock();
    write!(stdout, "{summary}")?;
    for p in out.written() {
        writeln!(stdout, "wrote {}", p.display())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string();
            if !msg.is_empty() {
                eprintln!("error: {msg}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
