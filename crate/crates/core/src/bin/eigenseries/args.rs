use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use eigenseries::evolution::EvolutionMethod;
use eigenseries::hamiltonian::ModelFamily;
use eigenseries::solver::{KernelMode, QForm, SolveMethod};

#[derive(Debug, Parser)]
#[command(name = "eigenseries", version, about = "Exact spectra and time evolution of finite Hermitian Hamiltonians")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve every level and compare against dense diagonalization.
    Spectrum(SpectrumArgs),
    /// Propagate a state with the order-by-order expansion.
    Evolve(EvolveArgs),
    /// Tabulate energy errors per method and truncation over a coupling grid.
    Convergence(ConvergenceArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Matrix JSON file: {"dim": n, "re": [[...]], "im": [[...]]}.
    #[arg(long, value_name = "FILE", conflicts_with = "model")]
    pub input: Option<PathBuf>,
    /// Generated model: two_level, chain or banded_random.
    #[arg(long)]
    pub model: Option<ModelFamily>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Level spacing.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Coupling strength.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Band half-width for banded_random.
    #[arg(long)]
    pub bandwidth: Option<usize>,
    /// Replace the input by (A + A†)/2 instead of rejecting small asymmetry.
    #[arg(long)]
    pub symmetrize: bool,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// JSON file with default settings; flags take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub root_tol: Option<f64>,
    #[arg(long)]
    pub continuation_steps: Option<usize>,
    /// resolvent or series.
    #[arg(long)]
    pub kernel: Option<KernelMode>,
    /// Path order of the series forms.
    #[arg(long = "L", value_name = "L")]
    pub series_order: Option<usize>,
    #[arg(long)]
    pub eq19_max_m: Option<usize>,
    /// closed or series.
    #[arg(long)]
    pub q_form: Option<QForm>,
    /// fixed_point or series_eq19.
    #[arg(long)]
    pub method: Option<SolveMethod>,
    #[arg(long)]
    pub gap_tol: Option<f64>,
    /// Worker threads for per-level solves.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Report destination (default stdout).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Also write the result table as CSV.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Initial state, comma separated; complex entries as re:im.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub psi0: Vec<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: f64,
    /// Truncation order of the expansion.
    #[arg(long = "L", value_name = "L")]
    pub order: Option<usize>,
    /// graded or path_sum.
    #[arg(long)]
    pub evolution_method: Option<EvolutionMethod>,
    #[arg(long)]
    pub conv_tol: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Truncation orders (M for the power series, L for the series kernel).
    #[arg(long, value_delimiter = ',')]
    pub orders: Option<Vec<usize>>,
    /// Coupling grid; for file input each value scales the file's coupling.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    #[command(flatten)]
    pub output: OutputArgs,
}
