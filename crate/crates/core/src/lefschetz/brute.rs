//! Brute-force orbit counts: enumerate the periodic points of a discrete map
//! exactly, take fixed-point indices from the linearization, and add up the
//! weights of the periodic orbits of the suspension degree by degree.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::arith::{self, IntMatrix, RatMatrix};
use super::poly::{count_roots, tarski_query, QPoly};
use super::LefschetzError;

/// Largest number of periodic points enumerated for one map.
pub const MAX_POINTS: u64 = 1_000_000;

/// Largest period for the planar polynomial map; `f^n` has degree `2^n`.
const MAX_PLANAR_PERIOD: u32 = 6;

/// Width of the band on which the cutoff of the period-doubling map is constant.
const PLANAR_FLAT: f64 = 20.0;

/// A discrete map `f: N -> N` with exactly computable periodic points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiscreteMapSpec {
    /// `x -> A x mod Z^n` on the torus, `det A = +-1`.
    ToralAutomorphism { matrix: Vec<Vec<i64>> },
    /// A self-map of a finite set of rational points, with the derivative of
    /// `f` at every point. Rationals are written as `"p/q"` strings.
    ExplicitGrid {
        points: Vec<Vec<String>>,
        image: Vec<usize>,
        jacobian: Vec<Vec<Vec<String>>>,
    },
    /// The period-doubling map `(x, y) -> (-x + (x^2 - x t)/100, -2 y)` on the
    /// square `(-w, w)^2`, `w <= 20`, where its cutoff is constant.
    PlanarPolynomial { t: f64, half_width: f64 },
}

/// Result of the enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitCount {
    /// Weight of the degree-`d` slice for `d = 1..=n`.
    pub weights: BTreeMap<u32, BigInt>,
    /// Number of periodic points of minimal period `d`.
    pub points: BTreeMap<u32, u64>,
}

impl OrbitCount {
    /// `|Fix(f^d)|`, the number of points of period dividing `d`.
    pub fn fixed_points(&self, d: u32) -> u64 {
        arith::divisors(d).iter().map(|m| self.points.get(m).copied().unwrap_or(0)).sum()
    }
}

/// Signs `(eps_1, eps_2)` of one periodic orbit: indices of `f^m` and `f^{2m}`
/// at a point of minimal period `m`.
struct OrbitSigns {
    period: u32,
    eps1: i64,
    eps2: i64,
}

/// Adds up the weights of the orbits and their double covers in degrees `1..=n`.
fn tally(orbits: &[OrbitSigns], n: u32) -> BTreeMap<u32, BigInt> {
    let mut w: BTreeMap<u32, BigInt> = (1..=n).map(|d| (d, BigInt::zero())).collect();
    for o in orbits {
        if o.period <= n {
            *w.get_mut(&o.period).unwrap() += o.eps1;
        }
        if 2 * o.period <= n {
            *w.get_mut(&(2 * o.period)).unwrap() += (o.eps2 - o.eps1) / 2;
        }
    }
    w
}

/// Counts the periodic orbits of `m` with periods up to `n`, weighted.
pub fn brute_force_orbit_count(m: &DiscreteMapSpec, n: u32) -> Result<OrbitCount, LefschetzError> {
    if n == 0 {
        return Err(LefschetzError::InvalidData("n must be at least 1".into()));
    }
    match m {
        DiscreteMapSpec::ToralAutomorphism { matrix } => toral(matrix, n),
        DiscreteMapSpec::ExplicitGrid { points, image, jacobian } => grid(points, image, jacobian, n),
        DiscreteMapSpec::PlanarPolynomial { t, half_width } => planar(*t, *half_width, n),
    }
}

fn sign_of(x: &BigRational) -> i64 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

fn rat_identity_minus(a: &RatMatrix) -> RatMatrix {
    a.iter()
        .enumerate()
        .map(|(i, r)| {
            r.iter()
                .enumerate()
                .map(|(j, v)| if i == j { BigRational::one() - v } else { -v.clone() })
                .collect()
        })
        .collect()
}

fn rat_mul(a: &RatMatrix, b: &RatMatrix) -> RatMatrix {
    let n = a.len();
    let m = b.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..b.len()).map(|k| &a[i][k] * &b[k][j]).sum())
                .collect()
        })
        .collect()
}

/// Index `sgn det(I - D)` of a fixed point with derivative `D`.
fn index(d: &RatMatrix, period: u32) -> Result<i64, LefschetzError> {
    match sign_of(&arith::det_rat(&rat_identity_minus(d))) {
        0 => Err(LefschetzError::NonHyperbolic { period }),
        s => Ok(s),
    }
}

fn to_rat(a: &IntMatrix) -> RatMatrix {
    a.iter()
        .map(|r| r.iter().map(|v| BigRational::from_integer(v.clone())).collect())
        .collect()
}

fn frac(v: &BigRational) -> BigRational {
    v - v.floor()
}

fn apply_mod1(a: &IntMatrix, x: &[BigRational]) -> Vec<BigRational> {
    a.iter()
        .map(|r| {
            let s: BigRational = r
                .iter()
                .zip(x)
                .map(|(c, v)| BigRational::from_integer(c.clone()) * v)
                .sum();
            frac(&s)
        })
        .collect()
}

fn toral(matrix: &[Vec<i64>], n: u32) -> Result<OrbitCount, LefschetzError> {
    let dim = matrix.len();
    if dim == 0 || matrix.iter().any(|r| r.len() != dim) {
        return Err(LefschetzError::InvalidData("toral matrix must be square".into()));
    }
    let a = arith::int_matrix(matrix);
    if !arith::det(&a).abs().is_one() {
        return Err(LefschetzError::InvalidData("toral matrix must have determinant +-1".into()));
    }
    // |Fix(A^d)| = |det(A^d - I)|
    let mut total = BigInt::zero();
    for d in 1..=n {
        let c = arith::det(&shift_identity(&arith::mat_pow(&a, d))).abs();
        if c.is_zero() {
            return Err(LefschetzError::NonHyperbolic { period: d });
        }
        total += &c;
        if total > BigInt::from(MAX_POINTS) {
            return Err(LefschetzError::TooManyPoints { n: d, count: c });
        }
    }
    let mut seen: BTreeSet<Vec<BigRational>> = BTreeSet::new();
    let mut orbits = Vec::new();
    let mut points: BTreeMap<u32, u64> = BTreeMap::new();
    for d in 1..=n {
        let ad = arith::mat_pow(&a, d);
        let b = shift_identity(&ad);
        let diag = arith::hermite_diagonal(&b);
        // coset representatives 0 <= v_i < h_ii of Z^n / B Z^n
        let sizes: Vec<u64> = diag.iter().map(|h| h.to_u64().unwrap_or(u64::MAX)).collect();
        let count: u64 = sizes.iter().product();
        for idx in 0..count {
            let mut rem = idx;
            let mut v = Vec::with_capacity(dim);
            for s in &sizes {
                v.push(BigInt::from(rem % s));
                rem /= s;
            }
            let x = arith::solve_int(&b, &v).ok_or(LefschetzError::NonHyperbolic { period: d })?;
            let x: Vec<BigRational> = x.iter().map(frac).collect();
            if seen.contains(&x) {
                continue;
            }
            // minimal period and the rest of the orbit
            let mut orbit = vec![x.clone()];
            let mut y = apply_mod1(&a, &x);
            while y != x {
                orbit.push(y.clone());
                y = apply_mod1(&a, &y);
            }
            let period = orbit.len() as u32;
            for p in orbit {
                seen.insert(p);
            }
            *points.entry(period).or_default() += period as u64;
            let am = to_rat(&arith::mat_pow(&a, period));
            orbits.push(OrbitSigns {
                period,
                eps1: index(&am, period)?,
                eps2: index(&rat_mul(&am, &am), 2 * period)?,
            });
        }
    }
    Ok(OrbitCount {
        weights: tally(&orbits, n),
        points,
    })
}

fn shift_identity(a: &IntMatrix) -> IntMatrix {
    let mut b = a.clone();
    for (i, row) in b.iter_mut().enumerate() {
        row[i] -= 1;
    }
    b
}

fn parse_rational(s: &str) -> Result<BigRational, LefschetzError> {
    s.trim()
        .parse::<BigRational>()
        .map_err(|_| LefschetzError::InvalidData(format!("not a rational number: {s:?}")))
}

fn grid(points: &[Vec<String>], image: &[usize], jacobian: &[Vec<Vec<String>>], n: u32) -> Result<OrbitCount, LefschetzError> {
    let np = points.len();
    if image.len() != np || jacobian.len() != np {
        return Err(LefschetzError::InvalidData("points, image and jacobian differ in length".into()));
    }
    if np as u64 > MAX_POINTS {
        return Err(LefschetzError::TooManyPoints { n: 1, count: BigInt::from(np) });
    }
    let dim = points.first().map_or(0, Vec::len);
    let mut pts: Vec<Vec<BigRational>> = Vec::with_capacity(np);
    for p in points {
        if p.len() != dim {
            return Err(LefschetzError::InvalidData("points differ in dimension".into()));
        }
        pts.push(p.iter().map(|s| parse_rational(s)).collect::<Result<_, _>>()?);
    }
    if pts.iter().collect::<BTreeSet<_>>().len() != np {
        return Err(LefschetzError::InvalidData("repeated grid point".into()));
    }
    let mut jac: Vec<RatMatrix> = Vec::with_capacity(np);
    for j in jacobian {
        if j.len() != dim || j.iter().any(|r| r.len() != dim) {
            return Err(LefschetzError::InvalidData("jacobian has the wrong shape".into()));
        }
        jac.push(
            j.iter()
                .map(|r| r.iter().map(|s| parse_rational(s)).collect::<Result<_, _>>())
                .collect::<Result<_, _>>()?,
        );
    }
    if image.iter().any(|&i| i >= np) {
        return Err(LefschetzError::InvalidData("image index out of range".into()));
    }
    let mut done = vec![false; np];
    let mut orbits = Vec::new();
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    for start in 0..np {
        if done[start] {
            continue;
        }
        // periodic iff the start returns within n steps
        let mut path = vec![start];
        let mut cur = image[start];
        while cur != start && path.len() < n as usize {
            path.push(cur);
            cur = image[cur];
        }
        if cur != start {
            continue;
        }
        let period = path.len() as u32;
        let mut d: RatMatrix = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect())
            .collect();
        for &p in &path {
            d = rat_mul(&jac[p], &d);
            done[p] = true;
        }
        *counts.entry(period).or_default() += period as u64;
        orbits.push(OrbitSigns {
            period,
            eps1: index(&d, period)?,
            eps2: index(&rat_mul(&d, &d), 2 * period)?,
        });
    }
    Ok(OrbitCount {
        weights: tally(&orbits, n),
        points: counts,
    })
}

fn planar(t: f64, half_width: f64, n: u32) -> Result<OrbitCount, LefschetzError> {
    if n > MAX_PLANAR_PERIOD {
        return Err(LefschetzError::TooManyPoints {
            n,
            count: BigInt::one() << n,
        });
    }
    if !(half_width > 0.0 && half_width <= PLANAR_FLAT) || !t.is_finite() {
        return Err(LefschetzError::InvalidData(format!(
            "planar map needs 0 < half_width <= {PLANAR_FLAT} and finite t"
        )));
    }
    let q = |v: f64| BigRational::from_float(v).expect("finite");
    let (tq, w) = (q(t), q(half_width));
    let hundredth = BigRational::new(BigInt::one(), BigInt::from(100));
    // x -> -x + (x^2 - x t)/100
    let f = QPoly::new(vec![
        BigRational::zero(),
        -BigRational::one() - &tq * &hundredth,
        hundredth,
    ]);
    let x = QPoly::x();
    let one = QPoly::constant(BigRational::one());
    let mut iterates = vec![x.clone()];
    for _ in 0..n {
        let next = f.compose(iterates.last().unwrap());
        iterates.push(next);
    }
    let h = |k: u32| iterates[k as usize].sub(&x);
    let (lo, hi) = (-w.clone(), w.clone());
    let taq = |p: &QPoly, g: &QPoly| tarski_query(p, g, &lo, &hi).ok_or(LefschetzError::OrbitLeavesRegion);
    // index factor of the y direction, sgn(1 - (-2)^k)
    let sy = |k: u32| if k % 2 == 0 { -1i64 } else { 1 };

    let mut points = BTreeMap::new();
    let mut sums: BTreeMap<u32, (i64, i64, i64)> = BTreeMap::new();
    for m in 1..=n {
        let mut r = h(m);
        for j in arith::divisors(m).into_iter().filter(|&j| j < m) {
            r = r.strip_common(&h(j));
        }
        let count = count_roots(&r, &lo, &hi).ok_or(LefschetzError::OrbitLeavesRegion)?;
        if count == 0 {
            continue;
        }
        // every point of the region must map into the region
        let image = iterates[1].clone();
        let inside = QPoly::constant(&w * &w).sub(&image.mul(&image));
        if taq(&r, &inside)? != count || taq(&r, &inside.mul(&inside))? != count {
            return Err(LefschetzError::OrbitLeavesRegion);
        }
        let mu = iterates[m as usize].derivative();
        let g1 = one.sub(&mu);
        let g2 = one.sub(&mu.mul(&mu));
        for g in [&g1, &g2] {
            if taq(&r, &g.mul(g))? != count {
                return Err(LefschetzError::NonHyperbolic { period: m });
            }
        }
        if count % m as i64 != 0 {
            return Err(LefschetzError::InvalidData(format!("{count} points of period {m} do not form orbits")));
        }
        points.insert(m, count as u64);
        // sums over the points of sgn det(I - D f^m) and sgn det(I - D f^{2m})
        sums.insert(m, (count, sy(m) * taq(&r, &g1)?, sy(2 * m) * taq(&r, &g2)?));
    }
    let mut weights = BTreeMap::new();
    for d in 1..=n {
        let mut num = sums.get(&d).map_or(0, |s| s.1);
        if d % 2 == 0 {
            if let Some(s) = sums.get(&(d / 2)) {
                num += s.2 - s.1;
            }
        }
        let (quot, rem) = BigInt::from(num).div_rem(&BigInt::from(d));
        if !rem.is_zero() {
            return Err(LefschetzError::NonIntegerWeight { d, numerator: BigInt::from(num) });
        }
        weights.insert(d, quot);
    }
    Ok(OrbitCount { weights, points })
}
