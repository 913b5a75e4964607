//! JSON report schema. Every top-level key is always present; blocks that
//! a command does not produce are `null`.

use eigenseries::evolution::{EvolutionMethod, EvolveConfig};
use eigenseries::hamiltonian::{MatrixFile, ModelSpec};
use eigenseries::linalg::C64;
use eigenseries::solver::{LevelDiagnostics, SolveConfig, SolveMethod, SpectrumDiagnostics};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub tool_version: &'static str,
    pub command: &'static str,
    /// "ok" or "solver_failure".
    pub status: &'static str,
    pub input: InputReport,
    pub config: ConfigReport,
    pub levels: Option<Vec<LevelReport>>,
    pub spectrum: Option<SpectrumDiagnostics>,
    pub oracle: Option<OracleReport>,
    pub evolution: Option<EvolutionReport>,
    pub convergence: Option<ConvergenceReport>,
    pub timings: Timings,
    pub failures: Vec<FailureReport>,
}

#[derive(Debug, Serialize)]
pub struct InputReport {
    /// "file" or "model".
    pub kind: &'static str,
    pub path: Option<String>,
    pub sha256: Option<String>,
    pub model: Option<ModelSpec>,
    pub symmetrized: bool,
    /// The Hamiltonian actually used, in input-file format.
    pub matrix: MatrixFile,
}

#[derive(Debug, Default, Serialize)]
pub struct ConfigReport {
    pub solver: Option<SolveConfig>,
    pub evolution: Option<EvolveConfig>,
}

#[derive(Debug, Serialize)]
pub struct LevelReport {
    pub gamma: usize,
    pub unperturbed: f64,
    pub energy: Option<f64>,
    pub residual: Option<f64>,
    pub iterations: Option<usize>,
    pub method: SolveMethod,
    pub continuation_steps: Option<usize>,
    pub rs2: Option<f64>,
    pub oracle: Option<f64>,
    pub oracle_error: Option<f64>,
    /// 2-norm distance between the unit-normalized, phase-aligned
    /// eigenvector and the oracle eigenvector.
    pub vector_error: Option<f64>,
    pub amplitudes: Option<Vec<C64>>,
    pub diagnostics: Option<LevelDiagnostics>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct OracleReport {
    pub eigenvalues: Vec<f64>,
    pub max_energy_error: Option<f64>,
    pub max_vector_error: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct EvolutionReport {
    pub t: f64,
    pub order: usize,
    pub method: EvolutionMethod,
    pub psi0: Vec<C64>,
    pub psi: Vec<C64>,
    pub order_norms: Vec<f64>,
    pub last_contribution: f64,
    pub converged: bool,
    pub norm_deviation: f64,
    pub cancellation_warning: bool,
    pub oracle_psi: Option<Vec<C64>>,
    /// `‖ψ(t) − exp(−iHt)ψ0‖₂`.
    pub deviation: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct ConvergenceRow {
    pub lambda: f64,
    pub gamma: usize,
    /// fixed_point, series_eq19 or rs2.
    pub method: &'static str,
    pub truncation: Option<usize>,
    pub energy: Option<f64>,
    pub reference: Option<f64>,
    pub error: Option<f64>,
    pub converged: bool,
    pub note: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct SlopeFit {
    pub method: &'static str,
    pub gamma: usize,
    /// Least-squares slope of log(error) against log(lambda).
    pub slope: Option<f64>,
    pub points: usize,
}

#[derive(Debug, Serialize)]
pub struct ConvergenceReport {
    pub lambdas: Vec<f64>,
    pub orders: Vec<usize>,
    pub rows: Vec<ConvergenceRow>,
    pub fits: Vec<SlopeFit>,
}

#[derive(Debug, Default, Serialize)]
pub struct Timings {
    pub total_ms: f64,
    pub solve_ms: f64,
    pub oracle_ms: f64,
}

#[derive(Debug, Serialize)]
pub struct FailureReport {
    pub gamma: Option<usize>,
    pub lambda: Option<f64>,
    pub error: String,
}
