//! Command-line driver for the primefock library.
//!
//! Subcommands: `build`, `spectrum`, `gap-sweep`, `phase-diagram`,
//! `partition`, `flow`, `verify`. Every run takes an optional TOML config
//! file (`--config`), with individual flags overriding config values.
//!
//! Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 I/O error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use config::FileConfig;

/// Environment variable holding the default worker-thread count.
pub const THREADS_ENV: &str = "PRIMEFOCK_THREADS";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        }
    }
}

impl From<primefock::Error> for CliError {
    fn from(e: primefock::Error) -> Self {
        use primefock::Error as E;
        match &e {
            E::NonConvergence { .. } | E::Overflow(_) => CliError::Numerical(e.to_string()),
            E::Io(_) | E::Parse(_) => CliError::Io(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "primefock",
    version,
    about = "Exact diagonalization of the Bose-Hubbard chain on the prime-indexed Fock space"
)]
struct Cli {
    /// TOML config file; explicit flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads (default: $PRIMEFOCK_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Assemble H on F_N and write MatrixMarket plus JSON metadata.
    Build(BuildArgs),
    /// Diagonalize H and write an (index, eigenvalue, expected_n, residual) CSV.
    Spectrum(SpectrumArgs),
    /// Sweep the on-site coupling and write the E1 - E0 gap curve.
    GapSweep(GapSweepArgs),
    /// Ground-state (or excited) <N> over a (mu, t) grid.
    PhaseDiagram(PhaseDiagramArgs),
    /// log Z over a (mu, t) grid, its Laplacian, and detected singular lines.
    Partition(PartitionArgs),
    /// Conjugate H by a diagonal unitary flow and report the invariants.
    Flow(FlowArgs),
    /// Run the cross-module invariant suite and print pass/fail lines.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
pub struct HamiltonianFlags {
    /// On-site coupling U.
    #[arg(long, allow_hyphen_values = true)]
    u: Option<f64>,
    /// Chemical potential mu.
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    /// Hopping amplitude t.
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    /// Truncation size N (matrix dimension).
    #[arg(long)]
    n: Option<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct OutputFlags {
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Base name for output files.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[command(flatten)]
    hamiltonian: HamiltonianFlags,
    #[command(flatten)]
    output: OutputFlags,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[command(flatten)]
    hamiltonian: HamiltonianFlags,
    #[command(flatten)]
    output: OutputFlags,
    /// Only the k smallest eigenpairs instead of the full spectrum.
    #[arg(long, value_name = "K")]
    count: Option<usize>,
    /// Diagonalize only the single-particle (prime) block.
    #[arg(long)]
    single_particle: bool,
}

#[derive(Args, Debug)]
pub struct GapSweepArgs {
    #[command(flatten)]
    hamiltonian: HamiltonianFlags,
    #[command(flatten)]
    output: OutputFlags,
    /// Smallest swept U.
    #[arg(long, allow_hyphen_values = true)]
    u_min: Option<f64>,
    /// Largest swept U.
    #[arg(long, allow_hyphen_values = true)]
    u_max: Option<f64>,
    /// Number of sweep points.
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct GridFlags {
    #[arg(long, allow_hyphen_values = true)]
    mu_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu_max: Option<f64>,
    #[arg(long)]
    mu_points: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    t_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_max: Option<f64>,
    #[arg(long)]
    t_points: Option<usize>,
    /// Weight Boltzmann factors by H alone instead of H - mu N.
    #[arg(long)]
    no_grand_shift: bool,
}

#[derive(Args, Debug)]
pub struct PhaseDiagramArgs {
    #[command(flatten)]
    hamiltonian: HamiltonianFlags,
    #[command(flatten)]
    grid: GridFlags,
    #[command(flatten)]
    output: OutputFlags,
    /// Eigenpair index per cell (0 = ground state).
    #[arg(long)]
    level: Option<usize>,
}

#[derive(Args, Debug)]
pub struct PartitionArgs {
    #[command(flatten)]
    hamiltonian: HamiltonianFlags,
    #[command(flatten)]
    grid: GridFlags,
    #[command(flatten)]
    output: OutputFlags,
    /// Inverse temperature.
    #[arg(long)]
    beta: Option<f64>,
    /// Singularity threshold on the filtered grid
    /// (default: 5x the median absolute value).
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args, Debug)]
pub struct FlowArgs {
    #[command(flatten)]
    hamiltonian: HamiltonianFlags,
    #[command(flatten)]
    output: OutputFlags,
    /// Flow time parameter.
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<f64>,
    /// Use one constant angle on every prime site.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "seed")]
    theta: Option<f64>,
    /// Seed for pseudo-random angles per prime site.
    #[arg(long)]
    seed: Option<u64>,
    /// Also export the conjugated matrix (MatrixMarket complex hermitian).
    #[arg(long)]
    export_matrix: bool,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Truncation size for the Fock-space checks.
    #[arg(long)]
    n: Option<u64>,
    /// Sequence depth for the circle-dual algebra checks.
    #[arg(long)]
    depth: Option<usize>,
    /// Testing hook: bias every measured deviation so the report fails.
    #[arg(long, hide = true)]
    inject_perturbation: bool,
}

fn resolve_threads(flag: Option<usize>, cfg: &FileConfig) -> Option<usize> {
    flag.or(cfg.threads).or_else(|| {
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    if let Some(threads) = resolve_threads(cli.threads, &cfg) {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // a second initialization in-process is harmless; keep the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match cli.command {
        Command::Build(args) => commands::build(&args, &cfg),
        Command::Spectrum(args) => commands::spectrum(&args, &cfg),
        Command::GapSweep(args) => commands::gap_sweep(&args, &cfg),
        Command::PhaseDiagram(args) => commands::phase_diagram(&args, &cfg),
        Command::Partition(args) => commands::partition(&args, &cfg),
        Command::Flow(args) => commands::flow(&args, &cfg),
        Command::Verify(args) => commands::verify(&args, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
