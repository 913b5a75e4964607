//! Exact eigenpairs from the scalar eigenvalue equation
//! `Ẽ_γ − E_γ = R_γ(E_γ − Ẽ_γ)`.
//!
//! For level γ the equation is `f(Ẽ) = Ẽ − E_γ − r (Ẽ I − H_⊥)^{-1} b = 0`.
//! `f` is strictly increasing between its poles (the eigenvalues of the
//! complement block `H_⊥` with nonzero overlap on `b`), so every pole
//! interval holds exactly one root. Roots are located by continuation in
//! the coupling scale `s ∈ (0, 1]` and a Newton iteration safeguarded by
//! bisection inside the pole interval that contains the seed.
//!
//! The eigenvector is `|Φ_γ⟩ + Σ_{γ'≠γ} Q_{γ'γ} |Φ_{γ'}⟩` with
//! `Q = (Ẽ I − H_⊥)^{-1} b`, either solved directly or summed as the path
//! series `D̃ (I + H̄ D̃ + (H̄ D̃)² + …) b`.

use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{SplitHamiltonian, DEFAULT_GAP_TOL};
use crate::jet::Jet;
use crate::kernel::{kernel_jet, last_two_max, KernelConfig, LevelChannel, POLE_DISTANCE};
use crate::linalg::{dotu, norm2, CMatrix, Lu, C64, ONE, ZERO};
use crate::oracle::{self, jacobi_eig};

/// How the kernel is evaluated inside the root search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMode {
    Resolvent,
    Series,
}

/// How the eigenvector amplitudes are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QForm {
    Closed,
    Series,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    FixedPoint,
    SeriesEq19,
}

fn parse_choice<T: Copy>(kind: &str, s: &str, table: &[(&str, T)]) -> Result<T> {
    table
        .iter()
        .find(|(name, _)| *name == s)
        .map(|&(_, v)| v)
        .ok_or_else(|| {
            let names: Vec<&str> = table.iter().map(|(n, _)| *n).collect();
            Error::InvalidArgument(format!("unknown {kind} '{s}', expected one of {}", names.join(", ")))
        })
}

impl FromStr for KernelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_choice("kernel", s, &[("resolvent", Self::Resolvent), ("series", Self::Series)])
    }
}

impl FromStr for QForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_choice("q form", s, &[("closed", Self::Closed), ("series", Self::Series)])
    }
}

impl FromStr for SolveMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_choice(
            "method",
            s,
            &[("fixed_point", Self::FixedPoint), ("series_eq19", Self::SeriesEq19)],
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveConfig {
    pub root_tol: f64,
    /// Newton iterations allowed per continuation stage.
    pub max_iter: usize,
    pub continuation_steps: usize,
    /// Highest derivative order `M` of the eigenvalue power series.
    pub eq19_max_m: usize,
    /// Partial-sum tail below which the eigenvalue power series counts as
    /// converged.
    pub eq19_tol: f64,
    pub q_form: QForm,
    pub kernel: KernelMode,
    pub method: SolveMethod,
    /// Path order `L` for the series forms.
    pub series_order: usize,
    pub conv_tol: f64,
    pub gap_tol: f64,
    /// Worker threads for [`solve_spectrum`]; 1 runs sequentially.
    pub jobs: usize,
    /// Times at which the partition identity is checked.
    pub partition_times: Vec<f64>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            root_tol: 1e-12,
            max_iter: 200,
            continuation_steps: 8,
            eq19_max_m: 8,
            eq19_tol: 1e-9,
            q_form: QForm::Closed,
            kernel: KernelMode::Resolvent,
            method: SolveMethod::FixedPoint,
            series_order: 200,
            conv_tol: 1e-10,
            gap_tol: DEFAULT_GAP_TOL,
            jobs: 1,
            partition_times: vec![0.1, 0.5, 1.0],
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.root_tol > 0.0) {
            return Err(Error::InvalidArgument("root_tol must be positive".into()));
        }
        if self.continuation_steps < 1 {
            return Err(Error::InvalidArgument("continuation_steps must be >= 1".into()));
        }
        if self.series_order < 1 {
            return Err(Error::InvalidArgument("series order L must be >= 1".into()));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
        }
        Ok(())
    }

    fn kernel_config(&self) -> KernelConfig {
        KernelConfig {
            max_path_order: self.series_order,
            jet_order: self.eq19_max_m,
            conv_tol: self.conv_tol,
            gap_tol: self.gap_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelDiagnostics {
    /// `|f(Ẽ)|` at the accepted root.
    pub root_residual: f64,
    /// Discarded imaginary part of the kernel at the root.
    pub imaginary_residue: f64,
    /// Independent check through the Green-operator form, `None` if that
    /// solve was singular.
    pub operator_residual: Option<f64>,
    /// Number of stages whose seed sat in a different pole interval than
    /// the previous stage's root.
    pub branch_jumps: usize,
    /// Root after each continuation stage.
    pub stage_roots: Vec<f64>,
    /// Pole interval bracketing the final root.
    pub bracket: (f64, f64),
    /// Power-series partial sums when `method = series_eq19`.
    pub eq19: Option<Eq19Series>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Eigenpair {
    pub gamma: usize,
    pub energy: f64,
    /// `a_{γγ'}` with `amplitudes[γ] = 1`.
    pub amplitudes: Vec<C64>,
    /// `‖H v − Ẽ v‖₂ / ‖v‖₂` against the unsplit Hamiltonian.
    pub residual: f64,
    pub method: SolveMethod,
    pub iterations: usize,
    pub continuation_steps: usize,
    pub diagnostics: LevelDiagnostics,
}

impl Eigenpair {
    /// Amplitudes scaled to unit 2-norm, for comparison with other solvers.
    pub fn normalized_amplitudes(&self) -> Vec<C64> {
        let n = norm2(&self.amplitudes);
        self.amplitudes.iter().map(|&a| a / n).collect()
    }
}

/// Partial sums of `E_γ + Σ_m (−1)^m/(m+1)! · d^m/dz^m R_γ^{m+1}(0)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Eq19Series {
    pub value: f64,
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// Largest of the last two terms.
    pub tail: f64,
    pub converged: bool,
    pub imaginary_residue: f64,
}

/// The scalar equation `f(x) = x − E_γ − R(x)` for one coupling stage.
struct RootFunction<'a> {
    ch: &'a LevelChannel,
    kernel: KernelMode,
    series_order: usize,
}

struct RootEval {
    f: f64,
    slope: f64,
    kernel_im: f64,
}

impl RootFunction<'_> {
    fn eval(&self, x: f64) -> Result<RootEval> {
        let w = C64::new(x, 0.0);
        let (r, dr) = match self.kernel {
            KernelMode::Resolvent => {
                let (lu, q) = self.ch.solve_at(w)?;
                let q2 = lu.solve(&q);
                (dotu(&self.ch.row, &q), dotu(&self.ch.row, &q2))
            }
            KernelMode::Series => {
                let gaps = self.ch.inverse_gaps(w)?;
                let (q, _) = series_apply(self.ch, &gaps, &self.ch.col, self.series_order);
                let (q2, _) = series_apply(self.ch, &gaps, &q, self.series_order);
                (dotu(&self.ch.row, &q), dotu(&self.ch.row, &q2))
            }
        };
        Ok(RootEval {
            f: x - self.ch.energy - r.re,
            slope: 1.0 + dr.re,
            kernel_im: r.im,
        })
    }
}

/// `Σ_{k<order} (D H̄)^k D v` and the larger of its last two term norms.
fn series_apply(ch: &LevelChannel, gaps: &[C64], v: &[C64], order: usize) -> (Vec<C64>, f64) {
    let mut u: Vec<C64> = gaps.iter().zip(v).map(|(d, x)| d * x).collect();
    let mut sum = u.clone();
    let mut norms = vec![norm2(&u)];
    for _ in 1..order {
        let hu = ch.limited.matvec(&u);
        u = gaps.iter().zip(hu).map(|(d, x)| d * x).collect();
        for (s, x) in sum.iter_mut().zip(&u) {
            *s += x;
        }
        norms.push(norm2(&u));
    }
    let tail = norms.iter().rev().take(2).fold(0.0f64, |a, &b| a.max(b));
    (sum, tail)
}

struct StageRoot {
    root: f64,
    iterations: usize,
    interval: usize,
    bracket: (f64, f64),
    eval: RootEval,
}

/// Eigenvalues of `H_⊥` that are true poles of the kernel (nonzero overlap
/// with the coupling column), ascending.
fn effective_poles(ch: &LevelChannel) -> Result<Vec<f64>> {
    let n = ch.levels.len();
    let mut block = ch.limited.clone();
    for k in 0..n {
        block[(k, k)] = C64::new(ch.levels[k], 0.0);
    }
    let eig = jacobi_eig(&block, oracle::DEFAULT_MAX_SWEEPS)?;
    let bnorm = norm2(&ch.col).powi(2);
    Ok((0..n)
        .filter(|&k| {
            let w = crate::linalg::dotc(&eig.vector(k), &ch.col).norm_sqr();
            w > 1e-20 * bnorm
        })
        .map(|k| eig.values[k])
        .collect())
}

fn gershgorin(ch: &LevelChannel) -> (f64, f64) {
    let mut lo = ch.energy - norm_l1(&ch.col);
    let mut hi = ch.energy + norm_l1(&ch.col);
    for k in 0..ch.levels.len() {
        let radius: f64 = ch.limited.row(k).iter().map(|x| x.norm()).sum::<f64>() + ch.col[k].norm();
        lo = lo.min(ch.levels[k] - radius);
        hi = hi.max(ch.levels[k] + radius);
    }
    (lo - 1.0, hi + 1.0)
}

fn norm_l1(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm()).sum()
}

fn solve_stage(ch: &LevelChannel, seed: f64, level: usize, cfg: &SolveConfig) -> Result<StageRoot> {
    let poles = effective_poles(ch)?;
    let (glo, ghi) = gershgorin(ch);
    let interval = poles.iter().filter(|&&p| p < seed).count();
    let mut lo = if interval == 0 { glo.min(seed - 1.0) } else { poles[interval - 1] };
    let mut hi = if interval == poles.len() { ghi.max(seed + 1.0) } else { poles[interval] };
    let bracket = (lo, hi);
    let func = RootFunction {
        ch,
        kernel: cfg.kernel,
        series_order: cfg.series_order,
    };

    let mut x = if seed > lo && seed < hi { seed } else { 0.5 * (lo + hi) };
    let no_root = |reason: String| Error::NoRealRoot { level, reason };
    for it in 1..=cfg.max_iter {
        let ev = match func.eval(x) {
            Ok(ev) => ev,
            Err(Error::PoleHit { .. }) | Err(Error::SingularSolve { .. }) => {
                // landed on a removable point; step off it towards the middle
                x = 0.5 * (x + 0.5 * (lo + hi));
                continue;
            }
            Err(e) => return Err(e),
        };
        if !ev.f.is_finite() || !ev.slope.is_finite() {
            return Err(no_root(format!("non-finite residual at {x}")));
        }
        if ev.f.abs() <= cfg.root_tol {
            let (root, ev) = polish(&func, x, ev, lo, hi);
            return Ok(StageRoot {
                root,
                iterations: it,
                interval,
                bracket,
                eval: ev,
            });
        }
        if ev.f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - ev.f / ev.slope;
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(1.0) || next == x {
            // bracket exhausted at machine precision
            return Ok(StageRoot {
                root: x,
                iterations: it,
                interval,
                bracket,
                eval: ev,
            });
        }
        x = next;
    }
    Err(no_root(format!(
        "no convergence in {} iterations inside ({lo}, {hi})",
        cfg.max_iter
    )))
}

/// One extra Newton step once the tolerance is met, kept only if it lowers
/// the residual.
fn polish(func: &RootFunction<'_>, x: f64, ev: RootEval, lo: f64, hi: f64) -> (f64, RootEval) {
    let next = x - ev.f / ev.slope;
    if next > lo && next < hi && next != x {
        if let Ok(ev2) = func.eval(next) {
            if ev2.f.abs() < ev.f.abs() {
                return (next, ev2);
            }
        }
    }
    (x, ev)
}

fn trivial_pair(s: &SplitHamiltonian, gamma: usize, method: SolveMethod) -> Eigenpair {
    let mut amplitudes = vec![ZERO; s.dim()];
    amplitudes[gamma] = ONE;
    let energy = s.levels()[gamma];
    Eigenpair {
        gamma,
        energy,
        amplitudes,
        residual: 0.0,
        method,
        iterations: 0,
        continuation_steps: 0,
        diagnostics: LevelDiagnostics {
            root_residual: 0.0,
            imaginary_residue: 0.0,
            operator_residual: Some(0.0),
            branch_jumps: 0,
            stage_roots: vec![energy],
            bracket: (energy, energy),
            eq19: None,
        },
    }
}

/// Solves the eigenvalue equation for level `gamma` and assembles its
/// eigenvector.
pub fn solve_level(s: &SplitHamiltonian, gamma: usize, cfg: &SolveConfig) -> Result<Eigenpair> {
    cfg.validate()?;
    s.check_index(gamma)?;
    s.require_nondegenerate(cfg.gap_tol)?;
    let full = LevelChannel::new(s, gamma);
    if s.dim() == 1 || full.is_decoupled() {
        let mut pair = trivial_pair(s, gamma, cfg.method);
        if s.dim() > 1 {
            pair.residual = eigen_residual(s, pair.energy, &pair.amplitudes);
        }
        return Ok(pair);
    }

    let (energy, iterations, stage_roots, branch_jumps, bracket, root_residual, im, eq19) =
        match cfg.method {
            SolveMethod::FixedPoint => {
                let mut seed = s.levels()[gamma];
                let mut stage_roots = Vec::with_capacity(cfg.continuation_steps);
                let mut iterations = 0;
                let mut jumps = 0;
                let mut prev_interval = None;
                let mut last = None;
                for k in 1..=cfg.continuation_steps {
                    let scale = k as f64 / cfg.continuation_steps as f64;
                    let ch = if k == cfg.continuation_steps {
                        full.clone()
                    } else {
                        LevelChannel::new(&s.with_coupling_scale(scale), gamma)
                    };
                    let stage = solve_stage(&ch, seed, gamma, cfg)?;
                    if prev_interval.is_some_and(|p| p != stage.interval) {
                        jumps += 1;
                    }
                    prev_interval = Some(stage.interval);
                    iterations += stage.iterations;
                    seed = stage.root;
                    stage_roots.push(stage.root);
                    last = Some(stage);
                }
                let last = last.expect("at least one continuation stage");
                (
                    last.root,
                    iterations,
                    stage_roots,
                    jumps,
                    last.bracket,
                    last.eval.f.abs(),
                    last.eval.kernel_im.abs(),
                    None,
                )
            }
            SolveMethod::SeriesEq19 => {
                let series = eigenvalue_series_eq19(s, gamma, cfg)?;
                let func = RootFunction {
                    ch: &full,
                    kernel: cfg.kernel,
                    series_order: cfg.series_order,
                };
                let ev = func.eval(series.value)?;
                (
                    series.value,
                    0,
                    vec![series.value],
                    0,
                    (series.value, series.value),
                    ev.f.abs(),
                    series.imaginary_residue,
                    Some(series),
                )
            }
        };

    let q = build_q(s, gamma, energy, cfg)?;
    let mut amplitudes = q;
    amplitudes[gamma] = ONE;
    let residual = eigen_residual(s, energy, &amplitudes);
    let operator_residual = eigenvalue_operator_residual(s, gamma, energy).ok();
    Ok(Eigenpair {
        gamma,
        energy,
        amplitudes,
        residual,
        method: cfg.method,
        iterations,
        continuation_steps: match cfg.method {
            SolveMethod::FixedPoint => cfg.continuation_steps,
            SolveMethod::SeriesEq19 => 0,
        },
        diagnostics: LevelDiagnostics {
            root_residual,
            imaginary_residue: im,
            operator_residual,
            branch_jumps,
            stage_roots,
            bracket,
            eq19,
        },
    })
}

/// `‖H v − Ẽ v‖₂ / ‖v‖₂` with `H` rebuilt from the split.
pub fn eigen_residual(s: &SplitHamiltonian, energy: f64, v: &[C64]) -> f64 {
    let h = s.reconstruct();
    let hv = h.matrix().matvec(v);
    let r: Vec<C64> = hv.iter().zip(v).map(|(a, b)| a - b * energy).collect();
    norm2(&r) / norm2(v)
}

/// `Q_{γ'γ}` for all `γ' ≠ γ`, scattered into a length-`dim` vector whose
/// `γ` entry is zero.
pub fn build_q(s: &SplitHamiltonian, gamma: usize, energy: f64, cfg: &SolveConfig) -> Result<Vec<C64>> {
    s.check_index(gamma)?;
    let ch = LevelChannel::new(s, gamma);
    let mut out = vec![ZERO; s.dim()];
    if ch.indices.is_empty() || ch.is_decoupled() {
        return Ok(out);
    }
    let w = C64::new(energy, 0.0);
    let q = match cfg.q_form {
        QForm::Closed => ch.solve_at(w)?.1,
        QForm::Series => {
            let gaps = ch.inverse_gaps(w)?;
            let (q, tail) = series_apply(&ch, &gaps, &ch.col, cfg.series_order);
            if tail > cfg.conv_tol {
                return Err(Error::NotConverged { tail });
            }
            q
        }
    };
    for (&i, qi) in ch.indices.iter().zip(q) {
        out[i] = qi;
    }
    Ok(out)
}

/// `E_γ + Σ_{m=0}^{M} (−1)^m/(m+1) · [z^m] R_γ(z)^{m+1}`, which equals the
/// derivative form `(−1)^m/(m+1)! · d^m/dz^m R^{m+1}|_{z=0}`.
pub fn eigenvalue_series_eq19(s: &SplitHamiltonian, gamma: usize, cfg: &SolveConfig) -> Result<Eq19Series> {
    cfg.validate()?;
    let kcfg = cfg.kernel_config();
    let r = kernel_jet(s, gamma, &kcfg)?;
    let e0 = s.levels()[gamma];
    let mut power: Jet = r.clone();
    let mut terms = Vec::with_capacity(kcfg.jet_order + 1);
    let mut partial_sums = Vec::with_capacity(kcfg.jet_order + 1);
    let mut acc = C64::new(e0, 0.0);
    for m in 0..=kcfg.jet_order {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let term = power.coeff(m) * (sign / (m + 1) as f64);
        acc += term;
        terms.push(term);
        partial_sums.push(acc.re);
        power = &power * &r;
    }
    let tail = last_two_max(&terms);
    Ok(Eq19Series {
        value: acc.re,
        terms: terms.iter().map(|t| t.re).collect(),
        partial_sums,
        tail,
        converged: tail <= cfg.eq19_tol && acc.re.is_finite(),
        imaginary_residue: acc.im.abs(),
    })
}

/// Rayleigh–Schrödinger energy through `order` 1 or 2.
pub fn rs_perturbation(s: &SplitHamiltonian, gamma: usize, order: u32) -> Result<f64> {
    s.check_index(gamma)?;
    s.require_nondegenerate(DEFAULT_GAP_TOL)?;
    let e = s.levels()[gamma];
    match order {
        1 => Ok(e),
        2 => Ok(e + (0..s.dim())
            .filter(|&i| i != gamma)
            .map(|i| s.g(gamma, i).norm_sqr() / (e - s.levels()[i]))
            .sum::<f64>()),
        other => Err(Error::InvalidArgument(format!(
            "perturbation order must be 1 or 2, got {other}"
        ))),
    }
}

/// Diagonal of the revised Green operator `(Ẽ − H0)^{-1}`. The γ entry is
/// set to zero when `with_gamma` is false or level γ is uncoupled.
fn revised_green_diagonal(s: &SplitHamiltonian, gamma: usize, energy: f64, with_gamma: bool) -> Result<Vec<C64>> {
    let decoupled = !with_gamma || (0..s.dim()).all(|i| s.g(i, gamma) == ZERO);
    (0..s.dim())
        .map(|i| {
            let den = energy - s.levels()[i];
            if i == gamma && !with_gamma {
                Ok(ZERO)
            } else if den.abs() > POLE_DISTANCE {
                Ok(C64::new(1.0 / den, 0.0))
            } else if i == gamma && decoupled {
                Ok(ZERO)
            } else if i == gamma {
                Err(Error::SingularSolve { pivot: den.abs() })
            } else {
                Err(Error::PoleHit {
                    index: i,
                    distance: den.abs(),
                })
            }
        })
        .collect()
}

/// `I − G̃ H̄` with row γ equal to `e_γ` (since `H̄` has an empty row γ).
fn limited_resolvent_factor(s: &SplitHamiltonian, gamma: usize, gt: &[C64]) -> Result<Lu> {
    let n = s.dim();
    let m = CMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { ONE } else { ZERO };
        if i == gamma || j == gamma {
            id
        } else {
            id - gt[i] * s.g(i, j)
        }
    });
    Lu::factor(&m)
}

/// Complete Green operator
/// `G_γ = P_γ G̃ + P_γ G̃ H₁ (I − G̃ H̄_{1γ})^{-1} G̃` at energy `Ẽ`.
pub fn green_operator(s: &SplitHamiltonian, gamma: usize, energy: f64) -> Result<CMatrix> {
    s.check_index(gamma)?;
    let n = s.dim();
    let gt = revised_green_diagonal(s, gamma, energy, true)?;
    let lu = limited_resolvent_factor(s, gamma, &gt)?;
    let gt_mat = CMatrix::from_diagonal(&gt);
    let x = lu.solve_matrix(&gt_mat);
    let mut g = gt_mat.matmul(s.coupling()).matmul(&x);
    g.add_assign(&gt_mat);
    for j in 0..n {
        g[(gamma, j)] = ZERO;
    }
    Ok(g)
}

/// `|⟨Φ_γ| H₁ (I − G̃ H̄)^{-1} G̃ H₁ |Φ_γ⟩ − (Ẽ − E_γ)|`. The γγ entry of
/// `G̃` only meets `g^{γγ} = 0` here, so `Ẽ = E_γ` is allowed.
pub fn eigenvalue_operator_residual(s: &SplitHamiltonian, gamma: usize, energy: f64) -> Result<f64> {
    s.check_index(gamma)?;
    let gt = revised_green_diagonal(s, gamma, energy, false)?;
    let lu = limited_resolvent_factor(s, gamma, &gt)?;
    let v: Vec<C64> = (0..s.dim())
        .map(|i| if i == gamma { ZERO } else { gt[i] * s.g(i, gamma) })
        .collect();
    let y = lu.solve(&v);
    let value: C64 = (0..s.dim()).map(|i| s.g(gamma, i) * y[i]).sum();
    Ok((value - C64::new(energy - s.levels()[gamma], 0.0)).norm())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumDiagnostics {
    pub solved: usize,
    pub failed: usize,
    /// Smallest gap between accepted energies.
    pub min_energy_gap: Option<f64>,
    pub distinct: bool,
    /// `|Σ Ẽ_γ − tr H|`, when every level solved.
    pub trace_error: Option<f64>,
    /// `max_t |Σ_γ e^{−iẼ_γ t} − tr exp(−iHt)|`, when every level solved.
    pub partition_error: Option<f64>,
    pub partition_times: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    /// One entry per γ, in γ order.
    pub levels: Vec<Result<Eigenpair>>,
    pub diagnostics: SpectrumDiagnostics,
}

impl Spectrum {
    /// Energies in γ order if every level solved.
    pub fn energies(&self) -> Option<Vec<f64>> {
        self.levels
            .iter()
            .map(|l| l.as_ref().ok().map(|p| p.energy))
            .collect()
    }

    pub fn pairs(&self) -> impl Iterator<Item = &Eigenpair> {
        self.levels.iter().filter_map(|l| l.as_ref().ok())
    }

    pub fn all_solved(&self) -> bool {
        self.levels.iter().all(Result::is_ok)
    }
}

/// Solves every level. Per-level failures are kept in place; global
/// diagnostics need all levels and are `None` otherwise.
pub fn solve_spectrum(s: &SplitHamiltonian, cfg: &SolveConfig) -> Result<Spectrum> {
    cfg.validate()?;
    s.require_nondegenerate(cfg.gap_tol)?;
    let n = s.dim();
    let levels: Vec<Result<Eigenpair>> = if cfg.jobs > 1 && n > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| (0..n).into_par_iter().map(|g| solve_level(s, g, cfg)).collect())
    } else {
        (0..n).map(|g| solve_level(s, g, cfg)).collect()
    };

    let energies: Vec<f64> = levels.iter().filter_map(|l| l.as_ref().ok().map(|p| p.energy)).collect();
    let solved = energies.len();
    let mut sorted = energies.clone();
    sorted.sort_by(f64::total_cmp);
    let min_energy_gap = sorted.windows(2).map(|w| w[1] - w[0]).reduce(f64::min);
    let mut diagnostics = SpectrumDiagnostics {
        solved,
        failed: n - solved,
        min_energy_gap,
        distinct: min_energy_gap.is_none_or(|g| g > cfg.gap_tol),
        trace_error: None,
        partition_error: None,
        partition_times: cfg.partition_times.clone(),
    };
    if solved == n {
        let h = s.reconstruct();
        diagnostics.trace_error = Some((energies.iter().sum::<f64>() - h.matrix().trace().re).abs());
        let eig = oracle::dense_eig(&h)?;
        let worst = cfg
            .partition_times
            .iter()
            .map(|&t| {
                let lhs: C64 = energies.iter().map(|&e| C64::new(0.0, -e * t).exp()).sum();
                let rhs = oracle::propagator_from_eig(&eig, t).trace();
                (lhs - rhs).norm()
            })
            .fold(0.0, f64::max);
        diagnostics.partition_error = Some(worst);
    }
    Ok(Spectrum { levels, diagnostics })
}
