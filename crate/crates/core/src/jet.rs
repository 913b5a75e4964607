//! Truncated power series in one variable around zero.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::linalg::{C64, ONE, ZERO};

/// `f(z) ≈ Σ_{m=0}^{M} coeffs[m] z^m`; all arithmetic truncates at order `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    coeffs: Vec<C64>,
}

impl Jet {
    pub fn new(coeffs: Vec<C64>) -> Self {
        assert!(!coeffs.is_empty(), "a jet carries at least the constant term");
        Self { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self::new(vec![ZERO; order + 1])
    }

    pub fn constant(order: usize, c: C64) -> Self {
        let mut j = Self::zero(order);
        j.coeffs[0] = c;
        j
    }

    /// The identity function `z`.
    pub fn variable(order: usize) -> Self {
        let mut j = Self::zero(order);
        if order >= 1 {
            j.coeffs[1] = ONE;
        }
        j
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, m: usize) -> C64 {
        self.coeffs.get(m).copied().unwrap_or(ZERO)
    }

    /// `d^m/dz^m f(0) = m! · coeffs[m]`.
    pub fn derivative_at_zero(&self, m: usize) -> C64 {
        let fact: f64 = (1..=m).map(|k| k as f64).product();
        self.coeff(m) * fact
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn reciprocal(&self) -> Result<Self> {
        let a0 = self.coeffs[0];
        if a0 == ZERO {
            return Err(Error::InvalidArgument(
                "jet reciprocal requires a nonzero constant term".into(),
            ));
        }
        let n = self.coeffs.len();
        let mut out = vec![ZERO; n];
        out[0] = ONE / a0;
        for m in 1..n {
            let s: C64 = (1..=m).map(|k| self.coeffs[k] * out[m - k]).sum();
            out[m] = -s / a0;
        }
        Ok(Self::new(out))
    }

    pub fn powi(&self, k: usize) -> Self {
        let mut acc = Self::constant(self.order(), ONE);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Evaluates the truncated polynomial at `z`.
    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }
}

fn check_orders(a: &Jet, b: &Jet) {
    assert_eq!(a.order(), b.order(), "jets of different order");
}

impl Add for &Jet {
    type Output = Jet;

    fn add(self, rhs: &Jet) -> Jet {
        check_orders(self, rhs);
        Jet::new(self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Jet {
    type Output = Jet;

    fn sub(self, rhs: &Jet) -> Jet {
        check_orders(self, rhs);
        Jet::new(self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect())
    }
}

impl Mul for &Jet {
    type Output = Jet;

    fn mul(self, rhs: &Jet) -> Jet {
        check_orders(self, rhs);
        let n = self.coeffs.len();
        let out = (0..n)
            .map(|m| (0..=m).map(|k| self.coeffs[k] * rhs.coeffs[m - k]).sum())
            .collect();
        Jet::new(out)
    }
}

impl Neg for &Jet {
    type Output = Jet;

    fn neg(self) -> Jet {
        self.scale(-ONE)
    }
}
