//! `fcf`: effective rates, phase maps, Chern diagrams, drive optimization and
//! Floquet validation from the command line.
//!
//! Results go to CSV/JSON/SVG files in `--out`; a JSON summary goes to
//! stdout. Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! with a one-line JSON error on stderr.

mod commands;
mod error;
mod range;
mod svg;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "fcf", version, about = "Floquet engineering of complex NNN tunneling on a shaken hexagonal lattice")]
struct Cli {
    /// Worker threads; the FCF_THREADS environment variable takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

/// Drive given as a JSON file or as family shorthand.
#[derive(Debug, Clone, Args)]
pub struct DriveArgs {
    /// Drive description (JSON).
    #[arg(long, conflicts_with_all = ["family", "amps", "deltas"])]
    pub drive: Option<PathBuf>,
    /// Chiral family: plus or minus.
    #[arg(long)]
    pub family: Option<String>,
    /// Amplitudes A_n/ω, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub amps: Option<String>,
    /// Phases δ_n, comma separated (δ_1 = 0).
    #[arg(long, allow_hyphen_values = true)]
    pub deltas: Option<String>,
    /// Base frequency ω (shorthand only).
    #[arg(long, default_value_t = 10.0)]
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyChoice {
    Plus,
    Minus,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    Driven,
    Haldane,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    /// Number of harmonics N.
    #[arg(long = "N", default_value_t = 2)]
    pub harmonics: usize,
    #[arg(long, default_value_t = 64)]
    pub starts: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = FamilyChoice::Both)]
    pub family: FamilyChoice,
    /// Search box 0 ≤ A_n/ω ≤ bound.
    #[arg(long, default_value_t = 5.0)]
    pub amp_bound: f64,
    /// Simplex iterations per penalty round.
    #[arg(long, default_value_t = 600)]
    pub max_iter: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Effective NN/NNN rates of a drive.
    Rates {
        #[command(flatten)]
        drive: DriveArgs,
        #[arg(long, default_value_t = 1.0)]
        j0: f64,
        /// Bare sublattice offset Δ.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        delta: f64,
        /// Also write rates.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// φ and j1/j0 over an (A1/ω, A2/ω) grid of the N = 2 plus drive.
    PhaseMap {
        #[arg(long = "A1", default_value = "0:3.5:0.05", allow_hyphen_values = true)]
        a1: String,
        #[arg(long = "A2", default_value = "0:3.5:0.05", allow_hyphen_values = true)]
        a2: String,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2, allow_negative_numbers = true)]
        delta2: f64,
        #[arg(long, default_value = "fcf-out")]
        out: PathBuf,
        /// Also write an SVG heatmap.
        #[arg(long)]
        svg: bool,
    },
    /// Lowest-band Chern number over (φ, Δ_eff/j2).
    ChernDiagram {
        #[arg(
            long,
            allow_hyphen_values = true,
            default_value = "-3.141592653589793:3.141592653589793:0.06544984694978735"
        )]
        phi: String,
        #[arg(long, allow_hyphen_values = true, default_value = "-8:8:0.16666666666666666")]
        ratio: String,
        /// Brillouin-zone grid per direction.
        #[arg(long, default_value_t = 48)]
        kgrid: usize,
        #[arg(long, value_enum, default_value_t = ModelChoice::Both)]
        model: ModelChoice,
        #[arg(long, default_value_t = 0.25)]
        j2_over_j1: f64,
        #[arg(long, default_value = "fcf-out")]
        out: PathBuf,
        #[arg(long)]
        svg: bool,
    },
    /// Maximize R = (j2/j1)(ω/j0) at one target phase and threshold.
    Optimize {
        #[arg(long, allow_negative_numbers = true)]
        phi_target: f64,
        #[arg(long)]
        r_th: f64,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, default_value = "fcf-out")]
        out: PathBuf,
    },
    /// One optimization per (family, φ_tg, r_th).
    Sweep {
        /// Target phases: list or start:stop:step.
        #[arg(
            long,
            allow_hyphen_values = true,
            default_value = "-2.356194490192345,-1.5707963267948966,-0.7853981633974483,0,0.7853981633974483,1.5707963267948966,2.356194490192345,3.141592653589793"
        )]
        phi_targets: String,
        #[arg(long, default_value = "0.25,0.5")]
        r_th: String,
        #[command(flatten)]
        search: SearchArgs,
        /// Bisection levels used to confirm parameter jumps.
        #[arg(long, default_value_t = 0)]
        refine: usize,
        #[arg(long, default_value = "fcf-out")]
        out: PathBuf,
    },
    /// Exact Floquet quasienergies against the effective model.
    Validate {
        #[command(flatten)]
        drive: DriveArgs,
        /// Sets ω = j0 / (this), keeping A/ω fixed.
        #[arg(long, default_value_t = 0.02)]
        j0_over_omega: f64,
        #[arg(long, default_value_t = 24)]
        kgrid: usize,
        #[arg(long, default_value_t = 4096)]
        steps: usize,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        delta: f64,
        /// Re-run with doubled steps and require agreement.
        #[arg(long)]
        richardson: bool,
        /// Also measure the deviation at ω·2^i for i < ladder.
        #[arg(long, default_value_t = 0)]
        ladder: usize,
        /// Also compute exact and effective Chern numbers on this grid.
        #[arg(long)]
        chern_grid: Option<usize>,
        #[arg(long, default_value = "fcf-out")]
        out: PathBuf,
    },
}

fn configure_threads(hint: Option<usize>) -> Result<(), CliError> {
    let threads = match std::env::var("FCF_THREADS") {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| CliError::Config(format!("FCF_THREADS must be a positive integer, got `{v}`")))?,
        ),
        Err(_) => hint,
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<String, CliError> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Rates { drive, j0, delta, out } => commands::rates(&drive, j0, delta, out.as_deref()),
        Command::PhaseMap { a1, a2, delta2, out, svg } => commands::phase_map(&a1, &a2, delta2, &out, svg),
        Command::ChernDiagram { phi, ratio, kgrid, model, j2_over_j1, out, svg } => {
            commands::chern_diagram(&phi, &ratio, kgrid, model, j2_over_j1, &out, svg)
        }
        Command::Optimize { phi_target, r_th, search, out } => commands::optimize(phi_target, r_th, &search, &out),
        Command::Sweep { phi_targets, r_th, search, refine, out } => {
            commands::sweep(&phi_targets, &r_th, &search, refine, &out)
        }
        Command::Validate { drive, j0_over_omega, kgrid, steps, delta, richardson, ladder, chern_grid, out } => {
            commands::validate(&commands::ValidateArgs {
                drive,
                j0_over_omega,
                kgrid,
                steps,
                delta,
                richardson,
                ladder,
                chern_grid,
                out,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            eprintln!("{}", CliError::Config(e.to_string().trim().to_string()).to_json());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(summary) => {
            // A closed stdout (e.g. piped into `head`) is not an error of the run.
            let _ = writeln!(std::io::stdout(), "{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
