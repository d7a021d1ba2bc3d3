//! Small dense linear algebra for matrices of dimension at most eight.
//!
//! Everything here works on owned row-major buffers. The eigenvalue routine
//! balances, reduces to upper Hessenberg form and runs a Francis double-shift
//! QR iteration; the characteristic polynomial is read off the same Hessenberg
//! form so the two computations share a similarity transform but not a code
//! path for the roots.

mod eigen;
mod lu;

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use eigen::{char_poly, eigenvalues, Spectrum};
pub use lu::{solve, Lu};

/// Largest dimension supported by the routines in this module.
pub const MAX_DIM: usize = 8;

/// Imaginary parts below this are treated as zero when classifying eigenvalues.
pub const REAL_TOL: f64 = 1e-9;

/// Determinants below this magnitude are reported as sign zero.
pub const DET_DEAD_BAND: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("matrix dimension {0} outside 1..={MAX_DIM}")]
    BadDimension(usize),
    #[error("expected {expected} entries, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("real eigenvalue {0} lies within tolerance of +1 or -1")]
    AmbiguousBoundary(f64),
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("QR iteration did not converge")]
    NoConvergence,
}

/// Square real matrix stored row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl SquareMatrix {
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self, LinalgError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(LinalgError::BadDimension(dim));
        }
        if entries.len() != dim * dim {
            return Err(LinalgError::BadLength {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        let m = SquareMatrix { dim, entries };
        m.check_finite()?;
        Ok(m)
    }

    /// Builds a matrix from rows; panics on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(LinalgError::BadLength {
                    expected: dim,
                    got: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        SquareMatrix::new(dim, entries)
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1 && dim <= MAX_DIM, "dimension {dim} unsupported");
        SquareMatrix {
            dim,
            entries: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = SquareMatrix::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = SquareMatrix::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Rotation of the plane by `angle` radians.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        SquareMatrix {
            dim: 2,
            entries: vec![c, -s, s, c],
        }
    }

    /// Matrix of multiplication by the complex number `z` on R^2.
    pub fn complex_multiplication(z: Complex64) -> Self {
        SquareMatrix {
            dim: 2,
            entries: vec![z.re, -z.im, z.im, z.re],
        }
    }

    /// Block-diagonal matrix built from square blocks.
    pub fn block_diag(blocks: &[SquareMatrix]) -> Self {
        let dim: usize = blocks.iter().map(|b| b.dim).sum();
        let mut m = SquareMatrix::zeros(dim);
        let mut off = 0;
        for b in blocks {
            for i in 0..b.dim {
                for j in 0..b.dim {
                    m[(off + i, off + j)] = b[(i, j)];
                }
            }
            off += b.dim;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn check_finite(&self) -> Result<(), LinalgError> {
        match self.entries.iter().position(|v| !v.is_finite()) {
            Some(k) => Err(LinalgError::NonFinite {
                row: k / self.dim,
                col: k % self.dim,
            }),
            None => Ok(()),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut t = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, c: f64) -> Self {
        SquareMatrix {
            dim: self.dim,
            entries: self.entries.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &SquareMatrix) -> Self {
        assert_eq!(self.dim, other.dim);
        SquareMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &SquareMatrix) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// `self + c * Id`.
    pub fn shift(&self, c: f64) -> Self {
        let mut m = self.clone();
        for i in 0..self.dim {
            m[(i, i)] += c;
        }
        m
    }

    pub fn matmul(&self, other: &SquareMatrix) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `self^power` by repeated squaring; `power = 0` gives the identity.
    pub fn pow(&self, power: u32) -> Self {
        let mut result = SquareMatrix::identity(self.dim);
        let mut base = self.clone();
        let mut p = power;
        while p > 0 {
            if p & 1 == 1 {
                result = result.matmul(&base);
            }
            p >>= 1;
            if p > 0 {
                base = base.matmul(&base);
            }
        }
        result
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn det(&self) -> f64 {
        Lu::factor(self).det()
    }

    pub fn inverse(&self) -> Result<SquareMatrix, LinalgError> {
        let lu = Lu::factor(self);
        if lu.is_singular() {
            return Err(LinalgError::Singular);
        }
        let n = self.dim;
        let mut inv = SquareMatrix::zeros(n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = lu.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv.check_finite()?;
        Ok(inv)
    }

    /// `Q^T A Q` for a matrix `Q` whose columns are given as vectors in R^dim.
    pub fn compress(&self, basis: &[Vec<f64>]) -> SquareMatrix {
        let k = basis.len();
        let mut out = SquareMatrix::zeros(k);
        for (j, qj) in basis.iter().enumerate() {
            let aq = self.mul_vec(qj);
            for (i, qi) in basis.iter().enumerate() {
                out[(i, j)] = dot(qi, &aq);
            }
        }
        out
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.entries[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.entries[i * self.dim + j]
    }
}

impl Mul for &SquareMatrix {
    type Output = SquareMatrix;
    fn mul(self, rhs: &SquareMatrix) -> SquareMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries((0..self.dim).map(|i| self.row(i)))
            .finish()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Sign of `det(m^power - Id)`; zero inside the dead band `|det| < 1e-12`.
pub fn sign_det_shifted(m: &SquareMatrix, power: u32) -> Result<i8, LinalgError> {
    assert!(power >= 1, "power must be positive");
    m.check_finite()?;
    let det = m.pow(power).shift(-1.0).det();
    if !det.is_finite() {
        return Err(LinalgError::NonFinite { row: 0, col: 0 });
    }
    if det.abs() < DET_DEAD_BAND {
        Ok(0)
    } else {
        Ok(sign(det))
    }
}

/// Numbers of real eigenvalues in `(-inf, 1)` and in `(-1, 1)`.
///
/// Eigenvalues with `|Im| < 1e-9` count as real. A real eigenvalue within
/// `1e-9` of `+1` or `-1` makes the split ambiguous and is reported as an error.
pub fn real_eigenvalue_counts(spectrum: &Spectrum) -> Result<(usize, usize), LinalgError> {
    let mut m1 = 0;
    let mut m2 = 0;
    for ev in spectrum.eigenvalues() {
        if ev.im.abs() >= REAL_TOL {
            continue;
        }
        let x = ev.re;
        if (x - 1.0).abs() < REAL_TOL || (x + 1.0).abs() < REAL_TOL {
            return Err(LinalgError::AmbiguousBoundary(x));
        }
        if x < 1.0 {
            m1 += 1;
            if x > -1.0 {
                m2 += 1;
            }
        }
    }
    Ok((m1, m2))
}

/// Orthonormal basis of the complement of `span(vectors)` in R^n.
///
/// The input vectors are orthonormalised first (modified Gram-Schmidt); the
/// complement is completed from the standard basis in order, so the result is
/// deterministic.
pub fn orthonormal_complement(n: usize, vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        if let Some(u) = orthonormalize_against(v, &basis) {
            basis.push(u);
        }
    }
    let fixed = basis.len();
    // Pick standard basis vectors with the largest residual first, for conditioning.
    while basis.len() < n {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            let r = residual(&e, &basis);
            let nr = norm(&r);
            if best.as_ref().is_none_or(|(b, _)| nr > *b + 1e-12) {
                best = Some((nr, r));
            }
        }
        let (nr, r) = best.expect("n > 0");
        basis.push(r.iter().map(|v| v / nr).collect());
    }
    basis.split_off(fixed)
}

fn residual(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut r = v.to_vec();
    for _ in 0..2 {
        for b in basis {
            let c = dot(&r, b);
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri -= c * bi;
            }
        }
    }
    r
}

fn orthonormalize_against(v: &[f64], basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let r = residual(v, basis);
    let nr = norm(&r);
    if nr < 1e-12 * (1.0 + norm(v)) {
        None
    } else {
        Some(r.iter().map(|x| x / nr).collect())
    }
}
