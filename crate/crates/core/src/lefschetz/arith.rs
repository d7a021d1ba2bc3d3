//! Exact integer and rational helpers: Möbius function, integer matrix
//! powers, Hermite normal form, rational solves and characteristic
//! polynomials.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type IntMatrix = Vec<Vec<BigInt>>;
pub type RatMatrix = Vec<Vec<BigRational>>;

/// Möbius function.
pub fn mobius(mut n: u64) -> i64 {
    assert!(n >= 1);
    let mut mu = 1;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            mu = -mu;
        }
        p += 1;
    }
    if n > 1 {
        mu = -mu;
    }
    mu
}

pub fn divisors(n: u32) -> Vec<u32> {
    (1..=n).filter(|d| n % d == 0).collect()
}

pub fn int_matrix(rows: &[Vec<i64>]) -> IntMatrix {
    rows.iter().map(|r| r.iter().map(|&v| BigInt::from(v)).collect()).collect()
}

pub fn identity(n: usize) -> IntMatrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect()
}

pub fn mat_mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let n = a.len();
    let m = b.first().map_or(0, Vec::len);
    let mut out = vec![vec![BigInt::zero(); m]; n];
    for i in 0..n {
        for (k, bk) in b.iter().enumerate() {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..m {
                out[i][j] += &a[i][k] * &bk[j];
            }
        }
    }
    out
}

pub fn mat_pow(a: &IntMatrix, mut e: u32) -> IntMatrix {
    let mut result = identity(a.len());
    let mut base = a.clone();
    while e > 0 {
        if e & 1 == 1 {
            result = mat_mul(&result, &base);
        }
        e >>= 1;
        if e > 0 {
            base = mat_mul(&base, &base);
        }
    }
    result
}

pub fn trace(a: &IntMatrix) -> BigInt {
    (0..a.len()).map(|i| a[i][i].clone()).sum()
}

fn to_rat(a: &IntMatrix) -> RatMatrix {
    a.iter()
        .map(|r| r.iter().map(|v| BigRational::from_integer(v.clone())).collect())
        .collect()
}

/// Determinant by fraction-free elimination over the rationals.
pub fn det(a: &IntMatrix) -> BigInt {
    det_rat(&to_rat(a)).to_integer()
}

pub fn det_rat(a: &RatMatrix) -> BigRational {
    let n = a.len();
    let mut m = a.clone();
    let mut d = BigRational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !m[r][c].is_zero()) else {
            return BigRational::zero();
        };
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        let pivot = m[c][c].clone();
        d *= &pivot;
        for r in c + 1..n {
            if m[r][c].is_zero() {
                continue;
            }
            let f = &m[r][c] / &pivot;
            for k in c..n {
                let v = &f * &m[c][k];
                m[r][k] -= v;
            }
        }
    }
    d
}

/// Solves `a x = b` for nonsingular `a`.
pub fn solve(a: &RatMatrix, b: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = a.len();
    let mut m: Vec<Vec<BigRational>> = a
        .iter()
        .zip(b)
        .map(|(r, v)| {
            let mut row = r.clone();
            row.push(v.clone());
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&r| !m[r][c].is_zero())?;
        m.swap(p, c);
        let pivot = m[c][c].clone();
        for k in c..=n {
            m[c][k] = &m[c][k] / &pivot;
        }
        for r in 0..n {
            if r != c && !m[r][c].is_zero() {
                let f = m[r][c].clone();
                for k in c..=n {
                    let v = &f * &m[c][k];
                    m[r][k] -= v;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n].clone()).collect())
}

pub fn solve_int(a: &IntMatrix, b: &[BigInt]) -> Option<Vec<BigRational>> {
    let rb: Vec<BigRational> = b.iter().map(|v| BigRational::from_integer(v.clone())).collect();
    solve(&to_rat(a), &rb)
}

/// Diagonal of a lower-triangular Hermite form `a u = h` with unimodular
/// `u`; the entries are positive for nonsingular `a`.
pub fn hermite_diagonal(a: &IntMatrix) -> Vec<BigInt> {
    let n = a.len();
    let mut h = a.clone();
    for i in 0..n {
        for j in i + 1..n {
            if h[i][j].is_zero() {
                continue;
            }
            let (x, y) = (h[i][i].clone(), h[i][j].clone());
            let e = x.extended_gcd(&y);
            let (g, p, q) = (e.gcd, e.x, e.y);
            let (xs, ys) = (&x / &g, &y / &g);
            for row in h.iter_mut() {
                let ci = row[i].clone();
                let cj = row[j].clone();
                row[i] = &p * &ci + &q * &cj;
                row[j] = &xs * &cj - &ys * &ci;
            }
        }
        if h[i][i].is_negative() {
            for row in h.iter_mut() {
                row[i] = -row[i].clone();
            }
        }
    }
    (0..n).map(|i| h[i][i].clone()).collect()
}

/// Coefficients `c_1..c_n` of the characteristic polynomial
/// `x^n + c_1 x^{n-1} + ... + c_n`, by Faddeev-LeVerrier.
pub fn char_poly(a: &IntMatrix) -> Vec<BigRational> {
    let n = a.len();
    let ra = to_rat(a);
    let mut m: RatMatrix = vec![vec![BigRational::zero(); n]; n];
    let mut coeffs = Vec::with_capacity(n);
    let mut c_prev = BigRational::one();
    for k in 1..=n {
        // m_k = a m_{k-1} + c_{k-1} I
        let mut next = vec![vec![BigRational::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = BigRational::zero();
                for l in 0..n {
                    if !ra[i][l].is_zero() && !m[l][j].is_zero() {
                        s += &ra[i][l] * &m[l][j];
                    }
                }
                if i == j {
                    s += &c_prev;
                }
                next[i][j] = s;
            }
        }
        m = next;
        let mut tr = BigRational::zero();
        for i in 0..n {
            for l in 0..n {
                if !ra[i][l].is_zero() && !m[l][i].is_zero() {
                    tr += &ra[i][l] * &m[l][i];
                }
            }
        }
        let c = -tr / BigRational::from_integer(BigInt::from(k));
        coeffs.push(c.clone());
        c_prev = c;
    }
    coeffs
}

/// Power sums `p_1..p_count` of the roots of `x^n + c_1 x^{n-1} + ... + c_n`
/// by Newton's identities.
pub fn power_sums(c: &[BigRational], count: usize) -> Vec<BigRational> {
    let n = c.len();
    let mut p: Vec<BigRational> = Vec::with_capacity(count);
    for l in 1..=count {
        let mut s = if l <= n {
            -BigRational::from_integer(BigInt::from(l)) * &c[l - 1]
        } else {
            BigRational::zero()
        };
        for i in 1..l.min(n + 1) {
            s -= &c[i - 1] * &p[l - i - 1];
        }
        p.push(s);
    }
    p
}
