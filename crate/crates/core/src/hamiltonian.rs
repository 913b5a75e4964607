//! Hermitian Hamiltonians, their diagonal/off-diagonal split, model families
//! and the JSON matrix file format.
//!
//! The split puts every diagonal entry of `H` into the unperturbed levels
//! `E_γ` and keeps the strictly off-diagonal remainder as the coupling
//! `g^{γγ'}`. Any diagonal part of a provisional coupling therefore lands in
//! the levels, and the coupling diagonal is exactly zero.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, ZERO};

/// Default absolute tolerance for the Hermiticity check.
pub const DEFAULT_HERM_TOL: f64 = 1e-12;

/// Default minimum gap between diagonal levels.
pub const DEFAULT_GAP_TOL: f64 = 1e-9;

/// Dense square Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    entries: CMatrix,
}

impl HermitianMatrix {
    /// Validates `entries` against [`DEFAULT_HERM_TOL`].
    pub fn new(entries: CMatrix) -> Result<Self> {
        Self::with_tolerance(entries, DEFAULT_HERM_TOL)
    }

    pub fn with_tolerance(entries: CMatrix, tol_herm: f64) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch {
                expected: entries.rows(),
                found: entries.cols(),
            });
        }
        if entries.rows() == 0 {
            return Err(Error::InvalidArgument("matrix dimension must be positive".into()));
        }
        let n = entries.rows();
        for i in 0..n {
            for j in i..n {
                let deviation = (entries[(i, j)] - entries[(j, i)].conj()).norm();
                if !(deviation <= tol_herm) {
                    return Err(Error::NotHermitian {
                        row: i,
                        col: j,
                        deviation,
                    });
                }
            }
        }
        Ok(Self { entries })
    }

    /// Replaces `A` by `(A + A†)/2` before validation.
    pub fn symmetrized(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch {
                expected: entries.rows(),
                found: entries.cols(),
            });
        }
        let n = entries.rows();
        let sym = CMatrix::from_fn(n, n, |i, j| (entries[(i, j)] + entries[(j, i)].conj()) * 0.5);
        Self::new(sym)
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::new(CMatrix::from_rows(&rows)?)
    }

    pub fn dim(&self) -> usize {
        self.entries.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }
}

/// `H = diag(levels) + coupling` with an exactly zero coupling diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitHamiltonian {
    levels: Vec<f64>,
    coupling: CMatrix,
}

/// Closest pair of diagonal levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelPair {
    pub first: usize,
    pub second: usize,
    pub gap: f64,
}

/// Outcome of [`check_nondegenerate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapCheck {
    pub nondegenerate: bool,
    pub closest: Option<LevelPair>,
}

impl SplitHamiltonian {
    /// Builds a split from explicit parts. The coupling diagonal is zeroed
    /// and the coupling must be Hermitian within [`DEFAULT_HERM_TOL`].
    pub fn from_parts(levels: Vec<f64>, coupling: CMatrix) -> Result<Self> {
        let n = levels.len();
        if coupling.rows() != n || coupling.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: coupling.rows(),
            });
        }
        let mut coupling = HermitianMatrix::new(coupling)?.into_matrix();
        for i in 0..n {
            coupling[(i, i)] = ZERO;
        }
        Ok(Self { levels, coupling })
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn coupling(&self) -> &CMatrix {
        &self.coupling
    }

    pub fn g(&self, i: usize, j: usize) -> C64 {
        self.coupling[(i, j)]
    }

    /// `diag(levels) + coupling`.
    pub fn reconstruct(&self) -> HermitianMatrix {
        let mut m = self.coupling.clone();
        for (i, &e) in self.levels.iter().enumerate() {
            m[(i, i)] = C64::new(e, 0.0);
        }
        HermitianMatrix { entries: m }
    }

    /// Same levels, coupling multiplied by `s`.
    pub fn with_coupling_scale(&self, s: f64) -> Self {
        Self {
            levels: self.levels.clone(),
            coupling: self.coupling.scale(C64::new(s, 0.0)),
        }
    }

    pub fn is_uncoupled(&self) -> bool {
        self.coupling.as_slice().iter().all(|&x| x == ZERO)
    }

    /// Indices other than `gamma`, ascending.
    pub fn complement(&self, gamma: usize) -> Vec<usize> {
        (0..self.dim()).filter(|&i| i != gamma).collect()
    }

    /// Column `gamma` of the coupling restricted to the complement.
    pub fn coupling_column(&self, gamma: usize) -> Vec<C64> {
        self.complement(gamma).into_iter().map(|i| self.g(i, gamma)).collect()
    }

    /// Row `gamma` of the coupling restricted to the complement.
    pub fn coupling_row(&self, gamma: usize) -> Vec<C64> {
        self.complement(gamma).into_iter().map(|i| self.g(gamma, i)).collect()
    }

    /// Coupling restricted to the complement block (rows and columns ≠ γ).
    pub fn limited_coupling(&self, gamma: usize) -> CMatrix {
        let idx = self.complement(gamma);
        self.coupling.select(&idx, &idx)
    }

    /// Total Hamiltonian restricted to the complement block.
    pub fn complement_block(&self, gamma: usize) -> CMatrix {
        let idx = self.complement(gamma);
        let mut m = self.coupling.select(&idx, &idx);
        for (k, &i) in idx.iter().enumerate() {
            m[(k, k)] = C64::new(self.levels[i], 0.0);
        }
        m
    }

    /// Fails with [`Error::Degenerate`] unless all level gaps exceed `gap_tol`.
    pub fn require_nondegenerate(&self, gap_tol: f64) -> Result<()> {
        let check = check_nondegenerate(self, gap_tol);
        match check.closest {
            Some(p) if !check.nondegenerate => Err(Error::Degenerate {
                first: p.first,
                second: p.second,
                gap: p.gap,
            }),
            _ => Ok(()),
        }
    }

    pub fn check_index(&self, gamma: usize) -> Result<()> {
        if gamma >= self.dim() {
            return Err(Error::InvalidArgument(format!(
                "level index {gamma} out of range for dim {}",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Splits `H` into diagonal levels and a strictly off-diagonal coupling.
///
/// Diagonal imaginary parts, already bounded by the Hermiticity check, are
/// dropped.
pub fn split(h: &HermitianMatrix) -> SplitHamiltonian {
    let m = h.matrix();
    let n = h.dim();
    let levels = (0..n).map(|i| m[(i, i)].re).collect();
    let mut coupling = m.clone();
    for i in 0..n {
        coupling[(i, i)] = ZERO;
    }
    SplitHamiltonian { levels, coupling }
}

/// True iff every pairwise level gap exceeds `gap_tol`; always reports the
/// closest pair when `dim >= 2`.
pub fn check_nondegenerate(s: &SplitHamiltonian, gap_tol: f64) -> GapCheck {
    let levels = s.levels();
    let mut closest: Option<LevelPair> = None;
    for i in 0..levels.len() {
        for j in i + 1..levels.len() {
            let gap = (levels[i] - levels[j]).abs();
            if closest.is_none_or(|c| gap < c.gap) {
                closest = Some(LevelPair {
                    first: i,
                    second: j,
                    gap,
                });
            }
        }
    }
    GapCheck {
        nondegenerate: closest.is_none_or(|c| c.gap > gap_tol),
        closest,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    TwoLevel,
    Chain,
    BandedRandom,
}

impl std::str::FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_level" => Ok(Self::TwoLevel),
            "chain" => Ok(Self::Chain),
            "banded_random" => Ok(Self::BandedRandom),
            other => Err(Error::InvalidSpec(format!("unknown model family '{other}'"))),
        }
    }
}

/// Parameters of a generated model Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub dim: usize,
    /// Level spacing Δ.
    pub gap: f64,
    /// Coupling strength λ.
    pub coupling: f64,
    /// Band half-width for `banded_random`.
    pub bandwidth: usize,
    pub seed: u64,
}

impl ModelSpec {
    pub fn two_level(gap: f64, coupling: f64) -> Self {
        Self {
            family: ModelFamily::TwoLevel,
            dim: 2,
            gap,
            coupling,
            bandwidth: 1,
            seed: 0,
        }
    }

    pub fn chain(dim: usize, gap: f64, coupling: f64) -> Self {
        Self {
            family: ModelFamily::Chain,
            dim,
            gap,
            coupling,
            bandwidth: 1,
            seed: 0,
        }
    }

    pub fn banded_random(dim: usize, coupling: f64, seed: u64) -> Self {
        Self {
            family: ModelFamily::BandedRandom,
            dim,
            gap: 1.0,
            coupling,
            bandwidth: 2,
            seed,
        }
    }
}

/// Generates the Hermitian matrix described by `spec`.
///
/// * `two_level`: `[[0, λ], [λ, Δ]]`
/// * `chain`: levels `kΔ`, nearest-neighbour coupling `λ`
/// * `banded_random`: levels `kΔ`, entries within the band drawn uniformly
///   from the unit square in the complex plane and scaled by `λ`
pub fn generate_model(spec: &ModelSpec) -> Result<HermitianMatrix> {
    if !spec.gap.is_finite() || !spec.coupling.is_finite() {
        return Err(Error::InvalidSpec("gap and coupling must be finite".into()));
    }
    let n = match spec.family {
        ModelFamily::TwoLevel => {
            if spec.dim != 2 {
                return Err(Error::InvalidSpec(format!(
                    "two_level requires dim = 2, got {}",
                    spec.dim
                )));
            }
            2
        }
        ModelFamily::Chain | ModelFamily::BandedRandom => {
            if spec.dim < 2 {
                return Err(Error::InvalidSpec(format!(
                    "{:?} requires dim >= 2, got {}",
                    spec.family, spec.dim
                )));
            }
            spec.dim
        }
    };
    let mut m = CMatrix::zeros(n, n);
    for k in 0..n {
        m[(k, k)] = C64::new(k as f64 * spec.gap, 0.0);
    }
    match spec.family {
        ModelFamily::TwoLevel | ModelFamily::Chain => {
            for k in 0..n - 1 {
                m[(k, k + 1)] = C64::new(spec.coupling, 0.0);
                m[(k + 1, k)] = C64::new(spec.coupling, 0.0);
            }
        }
        ModelFamily::BandedRandom => {
            if spec.bandwidth == 0 {
                return Err(Error::InvalidSpec("banded_random requires bandwidth >= 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            for i in 0..n {
                for j in i + 1..n.min(i + spec.bandwidth + 1) {
                    let re: f64 = rng.gen_range(-1.0..1.0);
                    let im: f64 = rng.gen_range(-1.0..1.0);
                    let v = C64::new(re, im) * spec.coupling;
                    m[(i, j)] = v;
                    m[(j, i)] = v.conj();
                }
            }
        }
    }
    HermitianMatrix::new(m)
}

/// On-disk matrix: `{"dim": n, "re": [[...]], "im": [[...]]}`, row-major,
/// `im` optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixFile {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let n = m.rows();
        let re = (0..n).map(|i| m.row(i).iter().map(|x| x.re).collect()).collect();
        let im = (0..n).map(|i| m.row(i).iter().map(|x| x.im).collect()).collect();
        Self { dim: n, re, im: Some(im) }
    }

    /// Checks the shape and assembles the complex matrix.
    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.dim;
        if n == 0 {
            return Err(Error::InvalidArgument("field 'dim' must be positive".into()));
        }
        check_grid("re", &self.re, n)?;
        if let Some(im) = &self.im {
            check_grid("im", im, n)?;
        }
        Ok(CMatrix::from_fn(n, n, |i, j| {
            let im = self.im.as_ref().map_or(0.0, |im| im[i][j]);
            C64::new(self.re[i][j], im)
        }))
    }

    pub fn to_hermitian(&self, symmetrize: bool) -> Result<HermitianMatrix> {
        let m = self.to_matrix()?;
        if symmetrize {
            HermitianMatrix::symmetrized(m)
        } else {
            HermitianMatrix::new(m)
        }
    }
}

fn check_grid(name: &str, grid: &[Vec<f64>], n: usize) -> Result<()> {
    if grid.len() != n {
        return Err(Error::InvalidArgument(format!(
            "field '{name}' has {} rows, expected {n}",
            grid.len()
        )));
    }
    for (i, row) in grid.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidArgument(format!(
                "field '{name}' row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn split_partitions_entries() {
        let h = HermitianMatrix::from_real_rows(&[vec![1.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let s = split(&h);
        assert_eq!(s.levels(), &[1.0, 3.0]);
        assert_eq!(s.g(0, 1), c(2.0, 0.0));
        assert_eq!(s.g(1, 0), c(2.0, 0.0));
        assert_eq!(s.g(0, 0), ZERO);
        assert_eq!(s.reconstruct(), h);
    }

    #[test]
    fn split_of_diagonal_has_zero_coupling() {
        let h = HermitianMatrix::from_real_rows(&[vec![5.0, 0.0], vec![0.0, 7.0]]).unwrap();
        let s = split(&h);
        assert_eq!(s.levels(), &[5.0, 7.0]);
        assert!(s.is_uncoupled());
    }

    #[test]
    fn zero_diagonal_is_degenerate() {
        let m = CMatrix::from_rows(&[vec![ZERO, c(0.0, 1.0)], vec![c(0.0, -1.0), ZERO]]).unwrap();
        let s = split(&HermitianMatrix::new(m).unwrap());
        assert_eq!(s.levels(), &[0.0, 0.0]);
        assert_eq!(s.g(0, 1), c(0.0, 1.0));
        let check = check_nondegenerate(&s, DEFAULT_GAP_TOL);
        assert!(!check.nondegenerate);
        let pair = check.closest.unwrap();
        assert_eq!((pair.first, pair.second), (0, 1));
        assert!(matches!(
            s.require_nondegenerate(DEFAULT_GAP_TOL),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn gap_check_examples() {
        let mk = |levels: Vec<f64>| {
            let n = levels.len();
            SplitHamiltonian::from_parts(levels, CMatrix::zeros(n, n)).unwrap()
        };
        assert!(check_nondegenerate(&mk(vec![0.0, 1.0, 2.0]), 1e-9).nondegenerate);
        let zero = check_nondegenerate(&mk(vec![0.0, 0.0]), 1e-9);
        assert!(!zero.nondegenerate);
        assert_eq!(zero.closest.map(|p| (p.first, p.second)), Some((0, 1)));
        assert!(!check_nondegenerate(&mk(vec![0.0, 1e-12]), 1e-9).nondegenerate);
    }

    #[test]
    fn non_hermitian_rejected_unless_symmetrized() {
        let m = CMatrix::from_rows(&[vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(2.5, 0.0), c(3.0, 0.0)]])
            .unwrap();
        assert!(matches!(
            HermitianMatrix::new(m.clone()),
            Err(Error::NotHermitian { row: 0, col: 1, .. })
        ));
        let h = HermitianMatrix::symmetrized(m).unwrap();
        assert_eq!(h.matrix()[(0, 1)], c(2.25, 0.0));
    }

    #[test]
    fn tiny_diagonal_imaginary_part_dropped() {
        let m = CMatrix::from_rows(&[vec![c(1.0, 1e-13), c(0.5, 0.0)], vec![c(0.5, 0.0), c(2.0, 0.0)]])
            .unwrap();
        let s = split(&HermitianMatrix::new(m).unwrap());
        assert_eq!(s.levels(), &[1.0, 2.0]);
    }

    #[test]
    fn two_level_model() {
        let h = generate_model(&ModelSpec::two_level(1.0, 1.0)).unwrap();
        let want = HermitianMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(h, want);
    }

    #[test]
    fn chain_model() {
        let s = split(&generate_model(&ModelSpec::chain(3, 1.0, 0.3)).unwrap());
        assert_eq!(s.levels(), &[0.0, 1.0, 2.0]);
        assert_eq!(s.g(0, 1), c(0.3, 0.0));
        assert_eq!(s.g(1, 2), c(0.3, 0.0));
        assert_eq!(s.g(0, 2), ZERO);
    }

    #[test]
    fn banded_random_is_reproducible() {
        let spec = ModelSpec::banded_random(6, 0.2, 42);
        let a = generate_model(&spec).unwrap();
        let b = generate_model(&spec).unwrap();
        assert_eq!(a, b);
        let other = generate_model(&ModelSpec::banded_random(6, 0.2, 43)).unwrap();
        assert_ne!(a, other);
        // entries outside the band are zero
        assert_eq!(a.matrix()[(0, 3)], ZERO);
        assert_ne!(a.matrix()[(0, 2)], ZERO);
    }

    #[test]
    fn invalid_specs() {
        assert!(matches!(
            generate_model(&ModelSpec::chain(1, 1.0, 0.1)),
            Err(Error::InvalidSpec(_))
        ));
        let mut spec = ModelSpec::two_level(1.0, 1.0);
        spec.dim = 3;
        assert!(matches!(generate_model(&spec), Err(Error::InvalidSpec(_))));
        assert!("ring".parse::<ModelFamily>().is_err());
    }

    #[test]
    fn matrix_file_round_trip() {
        let h = generate_model(&ModelSpec::banded_random(4, 0.3, 7)).unwrap();
        let file = MatrixFile::from_matrix(h.matrix());
        let text = serde_json::to_string(&file).unwrap();
        let back: MatrixFile = serde_json::from_str(&text).unwrap();
        let h2 = back.to_hermitian(false).unwrap();
        assert_eq!(split(&h2), split(&h));
    }

    #[test]
    fn matrix_file_optional_imaginary_part() {
        let f: MatrixFile = serde_json::from_str(r#"{"dim": 2, "re": [[0, 1], [1, 1]]}"#).unwrap();
        let h = f.to_hermitian(false).unwrap();
        assert_eq!(h.matrix()[(1, 1)], c(1.0, 0.0));
    }

    #[test]
    fn matrix_file_shape_errors_name_the_field() {
        let f: MatrixFile = serde_json::from_str(r#"{"dim": 2, "re": [[0, 1], [1]]}"#).unwrap();
        let msg = f.to_matrix().unwrap_err().to_string();
        assert!(msg.contains("'re'"), "{msg}");
    }
}
