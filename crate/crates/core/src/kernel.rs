//! The kernel function `R_γ(z)`: the sum over all coupling paths that leave
//! level γ, wander through the other levels and return, each intermediate
//! level `γ_i` contributing a denominator `E_γ − E_{γ_i} − z`.
//!
//! Three evaluations are provided:
//!
//! * [`kernel_series`]: the truncated path sum. Paths of length `l` are
//!   summed by iterated matrix-vector products over the complement block,
//!   `term_l = r · D(z) (H̄ D(z))^{l-1} b`, where `b`/`r` are column/row γ of
//!   the coupling, `D(z) = diag 1/(E_γ − E_i − z)` and `H̄` is the coupling
//!   restricted to indices ≠ γ.
//! * [`kernel_resolvent`]: the geometric series summed in closed form,
//!   `r · ((E_γ − z) I − H_⊥)^{-1} b` with `H_⊥` the Hamiltonian restricted
//!   to the complement.
//! * [`kernel_jet`]: Taylor coefficients of the closed form around `z = 0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{SplitHamiltonian, DEFAULT_GAP_TOL};
use crate::jet::Jet;
use crate::linalg::{dotu, norm2, CMatrix, Lu, C64, ZERO};

/// Denominators closer to zero than this are treated as poles.
pub const POLE_DISTANCE: f64 = 1e-14;

/// Condition numbers above this are reported as ill-conditioned.
pub const ILL_CONDITIONED: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelConfig {
    /// Number of path orders `L` summed by the series.
    pub max_path_order: usize,
    /// Number of derivatives `M` carried by the jet.
    pub jet_order: usize,
    /// Tail magnitude above which the series is flagged as not converged.
    pub conv_tol: f64,
    pub gap_tol: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            max_path_order: 200,
            jet_order: 8,
            conv_tol: 1e-10,
            gap_tol: DEFAULT_GAP_TOL,
        }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_path_order < 1 {
            return Err(Error::InvalidArgument("max_path_order must be >= 1".into()));
        }
        if !(self.conv_tol > 0.0) {
            return Err(Error::InvalidArgument("conv_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Result of the truncated path sum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelSeries {
    pub value: C64,
    /// `terms[l-1]` is the sum over all paths with `l` intermediate levels.
    pub terms: Vec<C64>,
    /// `max(|term_{L-1}|, |term_L|)`; bipartite couplings make every other
    /// term vanish.
    pub tail: f64,
    /// Power-iteration estimate of the spectral radius of `H̄ D(z)`.
    pub spectral_radius: f64,
    pub converged: bool,
}

/// Closed-form kernel value together with the conditioning of the solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolventValue {
    pub value: C64,
    pub condition: f64,
    pub ill_conditioned: bool,
}

/// The pieces of the Hamiltonian seen from a single level γ.
#[derive(Debug, Clone)]
pub(crate) struct LevelChannel {
    pub energy: f64,
    /// Complement indices, ascending.
    pub indices: Vec<usize>,
    /// Complement levels `E_i`, `i ≠ γ`.
    pub levels: Vec<f64>,
    /// `g^{γ i}`.
    pub row: Vec<C64>,
    /// `g^{i γ}`.
    pub col: Vec<C64>,
    /// `H̄`: coupling on the complement.
    pub limited: CMatrix,
}

impl LevelChannel {
    pub fn new(s: &SplitHamiltonian, gamma: usize) -> Self {
        let indices = s.complement(gamma);
        Self {
            energy: s.levels()[gamma],
            levels: indices.iter().map(|&i| s.levels()[i]).collect(),
            row: s.coupling_row(gamma),
            col: s.coupling_column(gamma),
            limited: s.limited_coupling(gamma),
            indices,
        }
    }

    pub fn is_decoupled(&self) -> bool {
        self.col.iter().all(|&x| x == ZERO)
    }

    /// `w I − H_⊥`.
    pub fn shifted_complement(&self, w: C64) -> CMatrix {
        let n = self.levels.len();
        let mut m = self.limited.scale(-C64::new(1.0, 0.0));
        for k in 0..n {
            m[(k, k)] = w - self.levels[k];
        }
        m
    }

    /// Factors `w I − H_⊥` and returns it with `x = (w I − H_⊥)^{-1} b`.
    pub fn solve_at(&self, w: C64) -> Result<(Lu, Vec<C64>)> {
        let lu = Lu::factor(&self.shifted_complement(w))?;
        let x = lu.solve(&self.col);
        Ok((lu, x))
    }

    /// Diagonal of `D`: `1/(w − E_i)`, failing at poles.
    pub fn inverse_gaps(&self, w: C64) -> Result<Vec<C64>> {
        self.levels
            .iter()
            .zip(&self.indices)
            .map(|(&e, &i)| {
                let den = w - e;
                if den.norm() <= POLE_DISTANCE {
                    Err(Error::PoleHit {
                        index: i,
                        distance: den.norm(),
                    })
                } else {
                    Ok(den.inv())
                }
            })
            .collect()
    }

    /// Vectors `u_l = (D H̄)^{l-1} D b` for `l = 1..=order`, passed to `visit`
    /// one at a time. Returns the ratio `‖u_L‖/‖u_{L-1}‖`.
    pub fn iterate_paths(
        &self,
        inv_gaps: &[C64],
        order: usize,
        mut visit: impl FnMut(usize, &[C64]),
    ) -> f64 {
        let mut u: Vec<C64> = inv_gaps.iter().zip(&self.col).map(|(d, b)| d * b).collect();
        let mut prev_norm = norm2(&u);
        let mut ratio = 0.0;
        visit(1, &u);
        for l in 2..=order {
            let hu = self.limited.matvec(&u);
            u = inv_gaps.iter().zip(hu).map(|(d, x)| d * x).collect();
            let nrm = norm2(&u);
            ratio = if prev_norm > 0.0 { nrm / prev_norm } else { 0.0 };
            prev_norm = nrm;
            visit(l, &u);
        }
        ratio
    }
}

fn prepare(s: &SplitHamiltonian, gamma: usize, gap_tol: f64) -> Result<LevelChannel> {
    s.check_index(gamma)?;
    s.require_nondegenerate(gap_tol)?;
    Ok(LevelChannel::new(s, gamma))
}

/// Truncated path sum of `R_γ(z)` up to `cfg.max_path_order` intermediate
/// levels. The cost is `O(L · dim²)`.
pub fn kernel_series(
    s: &SplitHamiltonian,
    gamma: usize,
    z: C64,
    cfg: &KernelConfig,
) -> Result<KernelSeries> {
    cfg.validate()?;
    let ch = prepare(s, gamma, cfg.gap_tol)?;
    if ch.indices.is_empty() {
        return Ok(KernelSeries {
            value: ZERO,
            terms: vec![ZERO; cfg.max_path_order],
            tail: 0.0,
            spectral_radius: 0.0,
            converged: true,
        });
    }
    let inv_gaps = ch.inverse_gaps(C64::new(ch.energy, 0.0) - z)?;
    let mut terms = Vec::with_capacity(cfg.max_path_order);
    let spectral_radius = ch.iterate_paths(&inv_gaps, cfg.max_path_order, |_, u| {
        terms.push(dotu(&ch.row, u));
    });
    let value = terms.iter().sum();
    let tail = last_two_max(&terms);
    Ok(KernelSeries {
        value,
        terms,
        tail,
        spectral_radius,
        converged: tail <= cfg.conv_tol,
    })
}

pub(crate) fn last_two_max(terms: &[C64]) -> f64 {
    terms.iter().rev().take(2).map(|t| t.norm()).fold(0.0, f64::max)
}

/// Closed form `r · ((E_γ − z) I − H_⊥)^{-1} b`.
pub fn kernel_resolvent(s: &SplitHamiltonian, gamma: usize, z: C64) -> Result<ResolventValue> {
    let ch = prepare(s, gamma, DEFAULT_GAP_TOL)?;
    if ch.indices.is_empty() {
        return Ok(ResolventValue {
            value: ZERO,
            condition: 1.0,
            ill_conditioned: false,
        });
    }
    let (lu, x) = ch.solve_at(C64::new(ch.energy, 0.0) - z)?;
    let condition = lu.condition();
    Ok(ResolventValue {
        value: dotu(&ch.row, &x),
        condition,
        ill_conditioned: condition > ILL_CONDITIONED,
    })
}

/// Taylor jet of `R_γ` at `z = 0` to order `cfg.jet_order`.
///
/// `coeffs[m] = r · A^{-(m+1)} b` with `A = E_γ I − H_⊥`, obtained by `m+1`
/// successive solves against one factorization.
pub fn kernel_jet(s: &SplitHamiltonian, gamma: usize, cfg: &KernelConfig) -> Result<Jet> {
    let ch = prepare(s, gamma, cfg.gap_tol)?;
    let order = cfg.jet_order;
    if ch.indices.is_empty() || ch.is_decoupled() {
        return Ok(Jet::zero(order));
    }
    let lu = Lu::factor(&ch.shifted_complement(C64::new(ch.energy, 0.0)))?;
    let mut x = ch.col.clone();
    let mut coeffs = Vec::with_capacity(order + 1);
    for _ in 0..=order {
        x = lu.solve(&x);
        coeffs.push(dotu(&ch.row, &x));
    }
    Ok(Jet::new(coeffs))
}
