use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pnrhd::povm::Outcome;
use pnrhd::wigner::{PhaseSpaceGrid, DEFAULT_EXTENT, DEFAULT_POINTS};
use pnrhd_cli::commands::{self, Reference};
use pnrhd_cli::CliError;

/// Photon-number-resolving homodyne detector toolkit.
///
/// Exit codes: 0 success, 1 i/o error, 2 invalid input, 3 numerical failure.
#[derive(Debug, Parser)]
#[command(name = "pnrhd", version)]
struct Cli {
    /// Seed for random sampling; overrides `[protocol] seed`. Commands that
    /// do not sample ignore it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides `[output] directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write POVM set files and a manifest for every configured setting.
    BuildPovm {
        #[arg(long)]
        config: PathBuf,
    },
    /// Render the Wigner function of an operator file on a grid.
    Wigner {
        /// Operator file, or POVM set file when `--element` is given.
        #[arg(long)]
        input: PathBuf,
        /// Element `k_a,k_b` of a POVM set file.
        #[arg(long, value_parser = parse_outcome)]
        element: Option<Outcome>,
        /// Half-width of the square grid in x and p.
        #[arg(long, default_value_t = DEFAULT_EXTENT)]
        extent: f64,
        /// Points per axis.
        #[arg(long, default_value_t = DEFAULT_POINTS)]
        points: usize,
    },
    /// Simulate a click record for a state over the configured sweep.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// State, e.g. `vacuum`, `fock:n=1`, `coherent:mean=0.59,theta=0.3`,
        /// `phase-averaged:mean=0.29`, `cat:alpha=1.2,parity=odd`,
        /// `squeezed:r=0.5,phi=0`.
        #[arg(long)]
        state: String,
    },
    /// Reconstruct a density operator from a record and a POVM manifest.
    Reconstruct {
        #[arg(long)]
        record: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Fidelity, mean photon number and phase of an estimate.
    Report {
        #[arg(long)]
        estimate: PathBuf,
        /// Reference state spec (same syntax as `simulate --state`).
        #[arg(
            long,
            conflicts_with = "reference_file",
            required_unless_present = "reference_file"
        )]
        reference: Option<String>,
        /// Reference operator file.
        #[arg(long)]
        reference_file: Option<PathBuf>,
    },
}

fn parse_outcome(s: &str) -> Result<Outcome, String> {
    let (a, b) = s.split_once(',').ok_or("expected `k_a,k_b`")?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| e.to_string());
    Ok(Outcome::new(parse(a)?, parse(b)?))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let out = cli.out.as_deref();
    let written = match cli.command {
        Command::BuildPovm { config } => commands::cmd_build_povm(&config, out)?,
        Command::Wigner {
            input,
            element,
            extent,
            points,
        } => commands::cmd_wigner(
            &input,
            element,
            &PhaseSpaceGrid::square(extent, points),
            out,
        )?,
        Command::Simulate { config, state } => {
            commands::cmd_simulate(&config, &state, cli.seed, out)?
        }
        Command::Reconstruct { record, manifest } => {
            commands::cmd_reconstruct(&record, &manifest, out)?
        }
        Command::Report {
            estimate,
            reference,
            reference_file,
        } => {
            let reference = match (reference, reference_file) {
                (Some(spec), _) => Reference::Spec(spec.parse().map_err(|e: pnrhd::Error| {
                    CliError::Validation(format!("--reference: {e}"))
                })?),
                (None, Some(path)) => Reference::File(path),
                (None, None) => unreachable!("clap requires one reference"),
            };
            let (written, text) = commands::cmd_report(&estimate, &reference, out)?;
            print!("{text}");
            written
        }
    };
    for path in written {
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
