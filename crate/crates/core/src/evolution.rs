//! c-number expansion of the propagator, `e^{−iHt} = Σ_l A_l(t)`, where
//! `A_l` collects every contribution of degree `l` in the coupling:
//!
//! `A_l^{γγ'} = Σ_{γ₂…γ_l} φ_t[E_γ, E_{γ₂}, …, E_{γ_l}, E_{γ'}] · g^{γγ₂} ⋯ g^{γ_lγ'}`
//!
//! with `φ_t[…]` the divided difference of `φ_t(E) = e^{−iEt}`. Paths that
//! revisit a level repeat a node; those divided differences are taken in
//! their confluent (derivative) form.
//!
//! Two routes compute the same `A_l`:
//! * [`EvolutionMethod::PathSum`] sums paths directly, grouping them by the
//!   multiset of visited levels so each divided difference is evaluated once.
//!   Its cost grows combinatorially and it is limited to small systems.
//! * [`EvolutionMethod::Graded`] expands `e^{−i(H0 + sH1)τ}` as a Taylor
//!   series graded by the power of `s`, then squares up to `t` with a
//!   degree-truncated Cauchy product.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::SplitHamiltonian;
use crate::linalg::{norm2, CMatrix, C64, ONE, ZERO};

/// Node spread × |t| beyond which divided differences lose accuracy.
pub const CANCELLATION_SPREAD: f64 = 50.0;
pub const PATH_SUM_MAX_DIM: usize = 8;
pub const PATH_SUM_MAX_ORDER: usize = 12;

/// Sub-tables whose node span × |t| is below this are summed as a Taylor
/// series instead of by difference quotients.
const CLUSTER_SPAN: f64 = 1.0;
/// `‖H‖₁ · τ` bound for the Taylor stage of the graded route.
const TAYLOR_RADIUS: f64 = 0.5;
const TAYLOR_MAX_TERMS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionMethod {
    Graded,
    PathSum,
}

impl FromStr for EvolutionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "graded" => Ok(Self::Graded),
            "path_sum" | "path-sum" => Ok(Self::PathSum),
            other => Err(Error::InvalidArgument(format!("unknown evolution method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolveConfig {
    /// Truncation order `L`.
    pub order: usize,
    pub method: EvolutionMethod,
    pub conv_tol: f64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            order: 30,
            method: EvolutionMethod::Graded,
            conv_tol: 1e-10,
        }
    }
}

/// `φ_t^{(k)}(x) / k! = (−it)^k / k! · e^{−ixt}`.
fn scaled_derivative(x: f64, t: f64, k: usize) -> C64 {
    let mut c = ONE;
    for j in 1..=k {
        c *= C64::new(0.0, -t / j as f64);
    }
    c * C64::new(0.0, -x * t).exp()
}

/// `φ_t[y_0 + c, …, y_m + c]` from the expansion
/// `e^{−itc} Σ_{n≥m} (−it)^n/n! · h_{n−m}(y)`, where `h_j` is the complete
/// homogeneous symmetric polynomial. Accurate when `|t|·max|y|` is small.
fn clustered_divided_difference(x: &[f64], t: f64) -> C64 {
    let m = x.len() - 1;
    let c = 0.5 * (x[0] + x[m]);
    let y: Vec<f64> = x.iter().map(|&xi| xi - c).collect();
    let lead = scaled_derivative(c, t, m);
    if y.iter().all(|&v| v == 0.0) {
        return lead;
    }
    let r = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    // h[i] holds h_j(y_0..y_i) for the current j
    let mut h = vec![1.0; m + 1];
    let mut coef = ONE;
    let mut sum = ONE;
    // |coef · h_j| ≤ (|t| r)^j / j!
    let mut bound = 1.0;
    for j in 1..=TAYLOR_MAX_TERMS {
        let mut acc = 0.0;
        for (hi, &yi) in h.iter_mut().zip(&y) {
            acc += yi * *hi;
            *hi = acc;
        }
        coef *= C64::new(0.0, -t / (m + j) as f64);
        sum += coef * h[m];
        bound *= t.abs() * r / j as f64;
        if bound <= 1e-17 * sum.norm() {
            break;
        }
    }
    lead * sum
}

/// Divided difference of `e^{−iEt}` over `nodes` (any order, repeats
/// allowed).
pub fn confluent_divided_difference(nodes: &[f64], t: f64) -> Result<C64> {
    if nodes.is_empty() {
        return Err(Error::InvalidArgument("divided difference needs at least one node".into()));
    }
    if nodes.iter().any(|x| !x.is_finite()) || !t.is_finite() {
        return Err(Error::InvalidArgument("nodes and t must be finite".into()));
    }
    let mut x = nodes.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len();
    let clustered = |i: usize, j: usize| (x[j] - x[i]) * t.abs() <= CLUSTER_SPAN;
    if clustered(0, n - 1) {
        return Ok(clustered_divided_difference(&x, t));
    }
    // d[i] holds φ[x_i … x_{i+k}] after pass k
    let mut d: Vec<C64> = x.iter().map(|&xi| C64::new(0.0, -xi * t).exp()).collect();
    for k in 1..n {
        for i in 0..n - k {
            d[i] = if x[i] == x[i + k] {
                scaled_derivative(x[i], t, k)
            } else if clustered(i, i + k) {
                clustered_divided_difference(&x[i..=i + k], t)
            } else {
                (d[i + 1] - d[i]) / (x[i + k] - x[i])
            };
        }
    }
    Ok(d[0])
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("t must be finite, got {t}")))
    }
}

/// `A_0 … A_order` at time `t`.
pub fn evolution_terms(s: &SplitHamiltonian, t: f64, order: usize, method: EvolutionMethod) -> Result<Vec<CMatrix>> {
    check_time(t)?;
    match method {
        EvolutionMethod::Graded => Ok(graded_terms(s, t, order)),
        EvolutionMethod::PathSum => path_sum_terms(s, t, order),
    }
}

/// `A_l` at time `t` by the graded route.
pub fn evolution_coefficient(s: &SplitHamiltonian, l: usize, t: f64) -> Result<CMatrix> {
    evolution_coefficient_with(s, l, t, EvolutionMethod::Graded)
}

pub fn evolution_coefficient_with(s: &SplitHamiltonian, l: usize, t: f64, method: EvolutionMethod) -> Result<CMatrix> {
    Ok(evolution_terms(s, t, l, method)?.pop().expect("order l yields l + 1 terms"))
}

fn graded_terms(s: &SplitHamiltonian, t: f64, order: usize) -> Vec<CMatrix> {
    let n = s.dim();
    let mut terms = vec![CMatrix::zeros(n, n); order + 1];
    if t == 0.0 {
        terms[0] = CMatrix::identity(n);
        return terms;
    }
    let levels = s.levels();
    let lo = levels.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // A uniform shift of H0 only multiplies every A_l by e^{−ict}
    let shift = 0.5 * (lo + hi);
    let h0: Vec<C64> = levels.iter().map(|&e| C64::new(e - shift, 0.0)).collect();
    let h1 = s.coupling();
    let norm = 0.5 * (hi - lo) + h1.norm_one();
    let squarings = if norm * t.abs() <= TAYLOR_RADIUS {
        0
    } else {
        (norm * t.abs() / TAYLOR_RADIUS).log2().ceil() as i32
    };
    let tau = t / 2f64.powi(squarings);
    let x = norm * tau.abs();

    let diag_mul = |m: &CMatrix| CMatrix::from_fn(n, n, |i, j| h0[i] * m[(i, j)]);
    // c[l] = sum of words in H0, H1 of length k containing l factors of H1
    let mut c = vec![CMatrix::identity(n)];
    terms[0] = CMatrix::identity(n);
    let mut coef = ONE;
    let mut bound = 1.0;
    for k in 1..=TAYLOR_MAX_TERMS {
        coef *= C64::new(0.0, -tau / k as f64);
        bound *= x / k as f64;
        let top = k.min(order);
        let next: Vec<CMatrix> = (0..=top)
            .map(|l| {
                let mut m = if l < c.len() { diag_mul(&c[l]) } else { CMatrix::zeros(n, n) };
                if l >= 1 {
                    m.add_assign(&h1.matmul(&c[l - 1]));
                }
                m
            })
            .collect();
        for (l, m) in next.iter().enumerate() {
            terms[l].add_assign(&m.scale(coef));
        }
        c = next;
        if bound < 1e-18 {
            break;
        }
    }

    for _ in 0..squarings {
        terms = (0..=order)
            .map(|l| {
                let mut m = CMatrix::zeros(n, n);
                for a in 0..=l {
                    m.add_assign(&terms[a].matmul(&terms[l - a]));
                }
                m
            })
            .collect();
    }

    let phase = C64::new(0.0, -shift * t).exp();
    terms.iter().map(|m| m.scale(phase)).collect()
}

fn path_sum_terms(s: &SplitHamiltonian, t: f64, order: usize) -> Result<Vec<CMatrix>> {
    let n = s.dim();
    if n > PATH_SUM_MAX_DIM || order > PATH_SUM_MAX_ORDER {
        return Err(Error::RegimeExceeded(format!(
            "path summation is limited to dim <= {PATH_SUM_MAX_DIM} and L <= {PATH_SUM_MAX_ORDER} \
             (got dim {n}, L {order})"
        )));
    }
    let levels = s.levels();
    let mut memo: BTreeMap<Vec<u8>, C64> = BTreeMap::new();
    let mut dd = |counts: &[u8]| -> Result<C64> {
        if let Some(v) = memo.get(counts) {
            return Ok(*v);
        }
        let nodes: Vec<f64> = counts
            .iter()
            .enumerate()
            .flat_map(|(k, &c)| std::iter::repeat_n(levels[k], c as usize))
            .collect();
        let v = confluent_divided_difference(&nodes, t)?;
        memo.insert(counts.to_vec(), v);
        Ok(v)
    };

    let mut terms = vec![CMatrix::zeros(n, n); order + 1];
    for src in 0..n {
        let mut start = vec![0u8; n];
        start[src] = 1;
        // (current level, visit counts) -> Σ of coupling products
        let mut states: BTreeMap<(usize, Vec<u8>), C64> = BTreeMap::new();
        states.insert((src, start), ONE);
        for l in 0..=order {
            if l > 0 {
                let mut next: BTreeMap<(usize, Vec<u8>), C64> = BTreeMap::new();
                for ((cur, counts), amp) in &states {
                    for j in 0..n {
                        let g = s.g(*cur, j);
                        if j == *cur || g == ZERO {
                            continue;
                        }
                        let mut c = counts.clone();
                        c[j] += 1;
                        *next.entry((j, c)).or_insert(ZERO) += amp * g;
                    }
                }
                states = next;
            }
            for ((cur, counts), amp) in &states {
                terms[l][(src, *cur)] += amp * dd(counts)?;
            }
        }
    }
    Ok(terms)
}

#[derive(Debug, Clone)]
pub struct EvolutionSeries {
    pub t: f64,
    pub order: usize,
    pub method: EvolutionMethod,
    /// `A_0 … A_L`.
    pub terms: Vec<CMatrix>,
    /// `Σ_l A_l`.
    pub assembled: CMatrix,
    /// `‖U†U − I‖_F` for the assembled operator.
    pub unitarity_deviation: f64,
    /// `(max E − min E) · |t|`.
    pub node_spread_t: f64,
    pub cancellation_warning: bool,
}

pub fn evolution_series(s: &SplitHamiltonian, t: f64, cfg: &EvolveConfig) -> Result<EvolutionSeries> {
    let terms = evolution_terms(s, t, cfg.order, cfg.method)?;
    let n = s.dim();
    let mut assembled = CMatrix::zeros(n, n);
    for m in &terms {
        assembled.add_assign(m);
    }
    let unitarity_deviation = assembled
        .adjoint()
        .matmul(&assembled)
        .sub(&CMatrix::identity(n))
        .frobenius_norm();
    let node_spread_t = node_spread(s) * t.abs();
    Ok(EvolutionSeries {
        t,
        order: cfg.order,
        method: cfg.method,
        terms,
        assembled,
        unitarity_deviation,
        node_spread_t,
        cancellation_warning: node_spread_t > CANCELLATION_SPREAD,
    })
}

fn node_spread(s: &SplitHamiltonian) -> f64 {
    let lo = s.levels().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = s.levels().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Propagation {
    pub psi: Vec<C64>,
    /// `‖A_l ψ0‖₂` for `l = 0..=L`.
    pub order_norms: Vec<f64>,
    pub last_contribution: f64,
    pub converged: bool,
    /// `|‖ψ(t)‖₂ − ‖ψ0‖₂|`.
    pub norm_deviation: f64,
    pub cancellation_warning: bool,
    pub method: EvolutionMethod,
}

/// `ψ(t) = Σ_{l≤L} A_l ψ0`.
pub fn propagate(s: &SplitHamiltonian, psi0: &[C64], t: f64, cfg: &EvolveConfig) -> Result<Propagation> {
    if psi0.len() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: psi0.len(),
        });
    }
    let n0 = norm2(psi0);
    if !(n0 > 0.0) || !n0.is_finite() {
        return Err(Error::InvalidArgument("psi0 must have a positive finite norm".into()));
    }
    let series = evolution_series(s, t, cfg)?;
    let mut psi = vec![ZERO; s.dim()];
    let mut order_norms = Vec::with_capacity(series.terms.len());
    for m in &series.terms {
        let v = m.matvec(psi0);
        order_norms.push(norm2(&v));
        for (p, x) in psi.iter_mut().zip(v) {
            *p += x;
        }
    }
    let last_contribution = *order_norms.last().expect("at least A_0");
    Ok(Propagation {
        norm_deviation: (norm2(&psi) - n0).abs(),
        psi,
        converged: last_contribution <= cfg.conv_tol,
        last_contribution,
        order_norms,
        cancellation_warning: series.cancellation_warning,
        method: cfg.method,
    })
}
