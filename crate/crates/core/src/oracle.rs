//! Reference dense eigensolver and propagator used as ground truth.
//!
//! Cyclic Jacobi on the complex Hermitian matrix: each rotation first
//! removes the phase of `a_pq` with a diagonal unitary, then applies the
//! real symmetric 2×2 rotation that annihilates it.

use crate::error::{Error, Result};
use crate::hamiltonian::HermitianMatrix;
use crate::linalg::{CMatrix, C64, ZERO};

pub const DEFAULT_MAX_SWEEPS: usize = 100;

/// Ascending eigenvalues with unitary eigenvector columns. Each column is
/// phased so its largest-magnitude component is real and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenDecomposition {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }
}

pub fn dense_eig(h: &HermitianMatrix) -> Result<EigenDecomposition> {
    jacobi_eig(h.matrix(), DEFAULT_MAX_SWEEPS)
}

/// Jacobi iteration on any matrix assumed Hermitian (only the upper
/// triangle drives the rotations).
pub(crate) fn jacobi_eig(h: &CMatrix, max_sweeps: usize) -> Result<EigenDecomposition> {
    let n = h.rows();
    let mut a = h.clone();
    for i in 0..n {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
    }
    let mut v = CMatrix::identity(n);
    let total = a.frobenius_norm();

    let off_norm = |a: &CMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut converged = n < 2;
    for _ in 0..max_sweeps {
        let off = off_norm(&a);
        if off == 0.0 || off <= 1e-2 * f64::EPSILON * total {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        let off = off_norm(&a);
        if !(off == 0.0 || off <= 1e-2 * f64::EPSILON * total) {
            return Err(Error::NoConvergence { sweeps: max_sweeps });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        let col = fix_phase(v.column(src));
        for (i, x) in col.into_iter().enumerate() {
            vectors[(i, k)] = x;
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // phase e^{-iφ} makes the (p, q) entry real and positive
    let phase = apq.conj() / mag;
    let zeta = (aqq - app) / (2.0 * mag);
    let t = if zeta >= 0.0 {
        1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
    } else {
        -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // U restricted to (p, q): [[c, s], [-s·phase, c·phase]]
    let u_pp = C64::new(c, 0.0);
    let u_pq = C64::new(s, 0.0);
    let u_qp = phase * (-s);
    let u_qq = phase * c;

    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * u_pp + akq * u_qp;
        a[(k, q)] = akp * u_pq + akq * u_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
        a[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * u_pp + vkq * u_qp;
        v[(k, q)] = vkp * u_pq + vkq * u_qq;
    }
}

/// Rotates `col` so that its first largest-magnitude component is real
/// positive.
pub fn fix_phase(mut col: Vec<C64>) -> Vec<C64> {
    let mut best = 0;
    for (i, x) in col.iter().enumerate() {
        if x.norm() > col[best].norm() * (1.0 + 1e-12) {
            best = i;
        }
    }
    let pivot = col[best];
    if pivot.norm() > 0.0 {
        let rot = pivot.conj() / pivot.norm();
        for x in &mut col {
            *x *= rot;
        }
        col[best] = C64::new(col[best].re, 0.0);
    }
    col
}

/// `exp(−iHt) = V diag(e^{−iλt}) V†`.
pub fn expm_minus_iht(h: &HermitianMatrix, t: f64) -> Result<CMatrix> {
    if t == 0.0 {
        return Ok(CMatrix::identity(h.dim()));
    }
    let eig = dense_eig(h)?;
    Ok(propagator_from_eig(&eig, t))
}

pub fn propagator_from_eig(eig: &EigenDecomposition, t: f64) -> CMatrix {
    let n = eig.values.len();
    let phases: Vec<C64> = eig.values.iter().map(|&l| C64::new(0.0, -l * t).exp()).collect();
    CMatrix::from_fn(n, n, |i, j| {
        (0..n)
            .map(|k| eig.vectors[(i, k)] * phases[k] * eig.vectors[(j, k)].conj())
            .sum()
    })
}
