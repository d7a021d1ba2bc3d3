//! Univariate polynomials over the rationals and exact Tarski queries.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Coefficients in ascending order, without trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QPoly(Vec<BigRational>);

impl QPoly {
    pub fn new(mut c: Vec<BigRational>) -> QPoly {
        while c.last().is_some_and(Zero::is_zero) {
            c.pop();
        }
        QPoly(c)
    }

    pub fn constant(c: BigRational) -> QPoly {
        QPoly::new(vec![c])
    }

    pub fn x() -> QPoly {
        QPoly::new(vec![BigRational::zero(), BigRational::one()])
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree, with `0` for constants and the zero polynomial.
    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    fn lead(&self) -> BigRational {
        self.0.last().cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add(&self, o: &QPoly) -> QPoly {
        let n = self.0.len().max(o.0.len());
        let z = BigRational::zero();
        QPoly::new(
            (0..n)
                .map(|i| self.0.get(i).unwrap_or(&z) + o.0.get(i).unwrap_or(&z))
                .collect(),
        )
    }

    pub fn sub(&self, o: &QPoly) -> QPoly {
        self.add(&o.scale(&-BigRational::one()))
    }

    pub fn scale(&self, c: &BigRational) -> QPoly {
        QPoly::new(self.0.iter().map(|a| a * c).collect())
    }

    pub fn mul(&self, o: &QPoly) -> QPoly {
        if self.is_zero() || o.is_zero() {
            return QPoly::new(Vec::new());
        }
        let mut out = vec![BigRational::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        QPoly::new(out)
    }

    /// `self(inner(x))`.
    pub fn compose(&self, inner: &QPoly) -> QPoly {
        let mut out = QPoly::new(Vec::new());
        for c in self.0.iter().rev() {
            out = out.mul(inner).add(&QPoly::constant(c.clone()));
        }
        out
    }

    pub fn derivative(&self) -> QPoly {
        QPoly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.0.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn div_rem(&self, d: &QPoly) -> (QPoly, QPoly) {
        assert!(!d.is_zero(), "division by the zero polynomial");
        let mut r = self.0.clone();
        let dl = d.lead();
        let dn = d.0.len();
        if r.len() < dn {
            return (QPoly::new(Vec::new()), self.clone());
        }
        let mut q = vec![BigRational::zero(); r.len() - dn + 1];
        for k in (0..q.len()).rev() {
            let c = &r[k + dn - 1] / &dl;
            if !c.is_zero() {
                for (j, dj) in d.0.iter().enumerate() {
                    r[k + j] -= &c * dj;
                }
            }
            q[k] = c;
        }
        r.truncate(dn - 1);
        (QPoly::new(q), QPoly::new(r))
    }

    fn monic(&self) -> QPoly {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(&(BigRational::one() / self.lead()))
    }

    pub fn gcd(&self, o: &QPoly) -> QPoly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r.monic();
        }
        a.monic()
    }

    /// Removes every root shared with `o`, with multiplicity.
    pub fn strip_common(&self, o: &QPoly) -> QPoly {
        let mut p = self.clone();
        loop {
            let g = p.gcd(o);
            if g.degree() == 0 {
                return p;
            }
            p = p.div_rem(&g).0;
        }
    }
}

fn sign(x: &BigRational) -> i32 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

fn variations(seq: &[QPoly], x: &BigRational) -> i64 {
    let signs: Vec<i32> = seq.iter().map(|p| sign(&p.eval(x))).filter(|&s| s != 0).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count() as i64
}

/// Tarski query `sum over distinct roots r of p in (a, b) of sign q(r)`,
/// from the signed remainder sequence of `(p, p' q)`. Needs `p(a) p(b) != 0`.
pub fn tarski_query(p: &QPoly, q: &QPoly, a: &BigRational, b: &BigRational) -> Option<i64> {
    if p.is_zero() || p.eval(a).is_zero() || p.eval(b).is_zero() {
        return None;
    }
    let mut seq = vec![p.clone(), p.derivative().mul(q)];
    while !seq.last().unwrap().is_zero() {
        let n = seq.len();
        let r = seq[n - 2].div_rem(&seq[n - 1]).1;
        // positive rescaling keeps signs and bounds coefficient growth
        let lead = r.lead();
        let r = if r.is_zero() { r } else { r.scale(&-(BigRational::one() / lead.abs())) };
        seq.push(r);
    }
    seq.pop();
    Some(variations(&seq, a) - variations(&seq, b))
}

/// Number of distinct roots of `p` in `(a, b)`.
pub fn count_roots(p: &QPoly, a: &BigRational, b: &BigRational) -> Option<i64> {
    tarski_query(p, &QPoly::constant(BigRational::one()), a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }

    fn poly(c: &[i64]) -> QPoly {
        QPoly::new(c.iter().map(|&v| q(v)).collect())
    }

    #[test]
    fn roots_and_signs() {
        // (x - 1)(x - 2)(x + 3)
        let p = poly(&[1, -1]).mul(&poly(&[-2, 1])).mul(&poly(&[3, 1]));
        assert_eq!(count_roots(&p, &q(-10), &q(10)), Some(3));
        assert_eq!(count_roots(&p, &q(0), &q(10)), Some(2));
        // sign of x at the roots: +1 + 1 - 1
        assert_eq!(tarski_query(&p, &QPoly::x(), &q(-10), &q(10)), Some(1));
        // double roots count once
        let d = p.mul(&p);
        assert_eq!(count_roots(&d, &q(-10), &q(10)), Some(3));
    }

    #[test]
    fn compose_and_strip() {
        let f = poly(&[0, 0, 1]);
        let ff = f.compose(&f);
        assert_eq!(ff, poly(&[0, 0, 0, 0, 1]));
        let a = poly(&[0, 1]).mul(&poly(&[0, 1])).mul(&poly(&[-1, 1]));
        let s = a.strip_common(&poly(&[0, 1]));
        assert_eq!(s, poly(&[-1, 1]));
    }
}
