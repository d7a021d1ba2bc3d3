//! Exact counts for suspensions of discrete maps: Lefschetz numbers from the
//! action on rational homology, Möbius-inverted orbit weights, the series
//! `pi_f`, and a brute-force count over enumerated periodic points.

mod arith;
mod brute;
mod poly;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use arith::mobius;
pub use brute::{brute_force_orbit_count, DiscreteMapSpec, OrbitCount, MAX_POINTS};

/// Largest distance of a Lefschetz number from an integer.
pub const TOL_INTEGER: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LefschetzError {
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("L(f^{n}) = {value} is not an integer")]
    NonIntegerLefschetz { n: u32, value: f64 },
    #[error("the weight of degree {d} is {numerator}/{d}, not an integer")]
    NonIntegerWeight { d: u32, numerator: BigInt },
    #[error("series coefficient {d} disagrees with the Möbius weight")]
    SeriesMismatch { d: u32 },
    #[error("{count} periodic points of period {n} exceed the enumeration limit")]
    TooManyPoints { n: u32, count: BigInt },
    #[error("a periodic point of period {period} is degenerate")]
    NonHyperbolic { period: u32 },
    #[error("a periodic orbit leaves the region")]
    OrbitLeavesRegion,
}

/// The map induced on `H_k(N; Q)`: an integer matrix in a basis of the free
/// part of integral homology, or the multiset of its eigenvalues as `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InducedMap {
    Matrix { matrix: Vec<Vec<i64>> },
    Eigenvalues { eigenvalues: Vec<[f64; 2]> },
}

impl InducedMap {
    pub fn rank(&self) -> usize {
        match self {
            InducedMap::Matrix { matrix } => matrix.len(),
            InducedMap::Eigenvalues { eigenvalues } => eigenvalues.len(),
        }
    }
}

/// Action of `f` on homology, degree by degree from `k = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomologyData {
    pub per_degree: Vec<InducedMap>,
    /// Betti numbers, checked against the ranks when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betti: Option<Vec<usize>>,
}

impl HomologyData {
    pub fn from_matrices(per_degree: Vec<Vec<Vec<i64>>>) -> HomologyData {
        HomologyData {
            per_degree: per_degree.into_iter().map(|matrix| InducedMap::Matrix { matrix }).collect(),
            betti: None,
        }
    }

    /// Action of a toral automorphism `A` of `T^n` on homology:
    /// `H_k = Λ^k Z^n` with the induced map `Λ^k A`.
    pub fn torus(a: &[Vec<i64>]) -> HomologyData {
        let n = a.len();
        let mut per_degree = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let subsets = k_subsets(n, k);
            let m: Vec<Vec<i64>> = subsets
                .iter()
                .map(|rows| {
                    subsets
                        .iter()
                        .map(|cols| {
                            let minor: Vec<Vec<i64>> = rows.iter().map(|&i| cols.iter().map(|&j| a[i][j]).collect()).collect();
                            arith::det(&arith::int_matrix(&minor)).to_i64().unwrap_or(0)
                        })
                        .collect()
                })
                .collect();
            per_degree.push(m);
        }
        HomologyData::from_matrices(per_degree)
    }

    /// The identity of the sphere `S^n`.
    pub fn identity_sphere(n: usize) -> HomologyData {
        let mut per_degree = vec![Vec::new(); n + 1];
        per_degree[0] = vec![vec![1]];
        per_degree[n] = vec![vec![1]];
        HomologyData::from_matrices(per_degree)
    }

    pub fn validate(&self) -> Result<(), LefschetzError> {
        if self.per_degree.is_empty() {
            return Err(LefschetzError::InvalidData("no homology degrees".into()));
        }
        for (k, m) in self.per_degree.iter().enumerate() {
            match m {
                InducedMap::Matrix { matrix } => {
                    if matrix.iter().any(|r| r.len() != matrix.len()) {
                        return Err(LefschetzError::InvalidData(format!("degree {k}: matrix is not square")));
                    }
                }
                InducedMap::Eigenvalues { eigenvalues } => {
                    if eigenvalues.iter().flatten().any(|v| !v.is_finite()) {
                        return Err(LefschetzError::InvalidData(format!("degree {k}: non-finite eigenvalue")));
                    }
                }
            }
        }
        if let Some(b) = &self.betti {
            let ranks: Vec<usize> = self.per_degree.iter().map(InducedMap::rank).collect();
            if *b != ranks {
                return Err(LefschetzError::InvalidData(format!(
                    "ranks {ranks:?} differ from the Betti numbers {b:?}"
                )));
            }
        }
        Ok(())
    }

    fn sign(k: usize) -> i64 {
        if k % 2 == 0 {
            1
        } else {
            -1
        }
    }
}

fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn round_checked(n: u32, value: f64) -> Result<BigInt, LefschetzError> {
    let r = value.round();
    if !value.is_finite() || (value - r).abs() > TOL_INTEGER {
        return Err(LefschetzError::NonIntegerLefschetz { n, value });
    }
    Ok(BigInt::from(r as i64))
}

/// `L(f^n) = sum_k (-1)^k tr(f_k^n)`. Matrix data is exact; eigenvalue data
/// is summed in floating point and must land within `TOL_INTEGER` of an integer.
pub fn lefschetz_number(h: &HomologyData, n: u32) -> Result<BigInt, LefschetzError> {
    if n == 0 {
        return Err(LefschetzError::InvalidData("n must be at least 1".into()));
    }
    h.validate()?;
    let mut exact = BigInt::zero();
    let mut approx = Complex64::new(0.0, 0.0);
    for (k, m) in h.per_degree.iter().enumerate() {
        let s = HomologyData::sign(k);
        match m {
            InducedMap::Matrix { matrix } => {
                if !matrix.is_empty() {
                    exact += arith::trace(&arith::mat_pow(&arith::int_matrix(matrix), n)) * s;
                }
            }
            InducedMap::Eigenvalues { eigenvalues } => {
                for &[re, im] in eigenvalues {
                    approx += Complex64::new(re, im).powu(n) * s as f64;
                }
            }
        }
    }
    if approx.im.abs() > TOL_INTEGER {
        return Err(LefschetzError::NonIntegerLefschetz { n, value: f64::NAN });
    }
    Ok(exact + round_checked(n, approx.re)?)
}

/// Möbius inversion of a Lefschetz sequence `l[0] = L(f), l[1] = L(f^2), ...`.
fn invert(l: &[BigInt], d: u32) -> Result<BigInt, LefschetzError> {
    let mut num = BigInt::zero();
    for e in arith::divisors(d) {
        num += arith::mobius((d / e) as u64) * &l[e as usize - 1];
    }
    let (q, r) = num.div_rem(&BigInt::from(d));
    if !r.is_zero() {
        return Err(LefschetzError::NonIntegerWeight { d, numerator: num });
    }
    Ok(q)
}

/// `n(Gamma_d) = (1/d) sum_{l | d} mu(d/l) L(f^l)` for `d = 1..=d_max`,
/// processed in increasing `d`.
pub fn moebius_weights(h: &HomologyData, d_max: u32) -> Result<BTreeMap<u32, BigInt>, LefschetzError> {
    if d_max == 0 {
        return Err(LefschetzError::InvalidData("d_max must be at least 1".into()));
    }
    let mut l = Vec::new();
    let mut out = BTreeMap::new();
    for d in 1..=d_max {
        l.push(lefschetz_number(h, d)?);
        out.insert(d, invert(&l, d)?);
    }
    Ok(out)
}

/// Coefficients of `pi_f = sum_k (-1)^k sum_j p_{lambda_k^j}` up to
/// `hbar^order`. Power sums come from the characteristic polynomials through
/// Newton's identities rather than matrix powers; every coefficient is then
/// checked against `moebius_weights`.
pub fn pi_series(h: &HomologyData, order: u32) -> Result<Vec<BigInt>, LefschetzError> {
    if order == 0 {
        return Err(LefschetzError::InvalidData("order must be at least 1".into()));
    }
    h.validate()?;
    let count = order as usize;
    let mut exact = vec![BigRational::zero(); count];
    let mut approx = vec![Complex64::new(0.0, 0.0); count];
    for (k, m) in h.per_degree.iter().enumerate() {
        let s = HomologyData::sign(k);
        match m {
            InducedMap::Matrix { matrix } => {
                if matrix.is_empty() {
                    continue;
                }
                let c = arith::char_poly(&arith::int_matrix(matrix));
                for (acc, p) in exact.iter_mut().zip(arith::power_sums(&c, count)) {
                    *acc += p * BigRational::from_integer(BigInt::from(s));
                }
            }
            InducedMap::Eigenvalues { eigenvalues } => {
                let roots: Vec<Complex64> = eigenvalues.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
                for (acc, p) in approx.iter_mut().zip(complex_power_sums(&roots, count)) {
                    *acc += p * s as f64;
                }
            }
        }
    }
    let mut l = Vec::with_capacity(count);
    for (i, (e, a)) in exact.iter().zip(&approx).enumerate() {
        let n = i as u32 + 1;
        if !e.is_integer() || a.im.abs() > TOL_INTEGER {
            return Err(LefschetzError::NonIntegerLefschetz {
                n,
                value: e.to_f64().unwrap_or(f64::NAN) + a.re,
            });
        }
        l.push(e.to_integer() + round_checked(n, a.re)?);
    }
    let mut coeffs = Vec::with_capacity(count);
    for d in 1..=order {
        coeffs.push(invert(&l, d)?);
    }
    let weights = moebius_weights(h, order)?;
    for (d, c) in (1..=order).zip(&coeffs) {
        if weights.get(&d) != Some(c) {
            return Err(LefschetzError::SeriesMismatch { d });
        }
    }
    Ok(coeffs)
}

/// Power sums of `roots` through the coefficients of `prod (x - r)`.
fn complex_power_sums(roots: &[Complex64], count: usize) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (i, ci) in c.iter().enumerate() {
            next[i] += ci;
            next[i + 1] -= ci * r;
        }
        c = next;
    }
    let n = roots.len();
    let mut p: Vec<Complex64> = Vec::with_capacity(count);
    for l in 1..=count {
        let mut s = if l <= n { -(l as f64) * c[l] } else { Complex64::new(0.0, 0.0) };
        for i in 1..l.min(n + 1) {
            s -= c[i] * p[l - i - 1];
        }
        p.push(s);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat() -> HomologyData {
        HomologyData::torus(&[vec![2, 1], vec![1, 1]])
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn cat_map_lefschetz_numbers() {
        let l: Vec<BigInt> = (1..=3).map(|n| lefschetz_number(&cat(), n).unwrap()).collect();
        assert_eq!(l, ints(&[-1, -5, -16]));
    }

    #[test]
    fn torus_homology_is_exterior_power() {
        let h = cat();
        let ranks: Vec<usize> = h.per_degree.iter().map(InducedMap::rank).collect();
        assert_eq!(ranks, vec![1, 2, 1]);
        assert_eq!(h.per_degree[2], InducedMap::Matrix { matrix: vec![vec![1]] });
    }

    #[test]
    fn cat_map_weights_and_series() {
        let w = moebius_weights(&cat(), 3).unwrap();
        assert_eq!(w.values().cloned().collect::<Vec<_>>(), ints(&[-1, -2, -5]));
        assert_eq!(pi_series(&cat(), 3).unwrap(), ints(&[-1, -2, -5]));
    }

    #[test]
    fn sphere_identity() {
        let h = HomologyData::identity_sphere(2);
        for n in 1..=5 {
            assert_eq!(lefschetz_number(&h, n).unwrap(), BigInt::from(2));
        }
        assert_eq!(pi_series(&h, 3).unwrap(), ints(&[2, 0, 0]));
    }

    #[test]
    fn single_unit_eigenvalue_collapses() {
        let h = HomologyData {
            per_degree: vec![InducedMap::Eigenvalues { eigenvalues: vec![[1.0, 0.0]] }],
            betti: None,
        };
        assert_eq!(pi_series(&h, 5).unwrap(), ints(&[1, 0, 0, 0, 0]));
    }

    #[test]
    fn inconsistent_data_is_rejected() {
        // roots of x^2 - x - 1/2: L(f) = 1, L(f^2) = 2
        let r = 3f64.sqrt() / 2.0;
        let h = HomologyData {
            per_degree: vec![InducedMap::Eigenvalues { eigenvalues: vec![[0.5 + r, 0.0], [0.5 - r, 0.0]] }],
            betti: None,
        };
        assert!(matches!(moebius_weights(&h, 2), Err(LefschetzError::NonIntegerWeight { d: 2, .. })));
        let h = HomologyData {
            per_degree: vec![InducedMap::Eigenvalues { eigenvalues: vec![[0.5, 0.0]] }],
            betti: None,
        };
        assert!(matches!(lefschetz_number(&h, 1), Err(LefschetzError::NonIntegerLefschetz { .. })));
    }

    #[test]
    fn betti_numbers_are_checked() {
        let mut h = cat();
        h.betti = Some(vec![1, 1, 1]);
        assert!(matches!(h.validate(), Err(LefschetzError::InvalidData(_))));
    }
}
