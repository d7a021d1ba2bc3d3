use serde::{Deserialize, Serialize};

use super::{FlowError, PolynomialField};
use crate::linalg::{self, SquareMatrix};

/// Discrete maps whose mapping cylinders are studied through their return map.
///
/// A closed orbit of the suspension flow with period `m` is exactly a periodic
/// point of the map with period `m`, and the linearized holonomy of that orbit
/// is the derivative of `f^m` at the point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    /// `f_t(x, y) = (-x + eta(x) (x^2 - x t), -2 y)` where `eta` is a smooth
    /// even bump equal to 1/100 on [-20, 20] and vanishing outside [-40, 40].
    PeriodDoubling,
    /// Polynomial map with coefficients polynomial in `t`.
    Polynomial(PolynomialField),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderMap {
    pub kind: MapKind,
}

impl CylinderMap {
    pub fn period_doubling() -> Self {
        CylinderMap {
            kind: MapKind::PeriodDoubling,
        }
    }

    pub fn polynomial(p: PolynomialField) -> Self {
        CylinderMap {
            kind: MapKind::Polynomial(p),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            MapKind::PeriodDoubling => 2,
            MapKind::Polynomial(p) => p.dim,
        }
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        match &self.kind {
            MapKind::PeriodDoubling => Ok(()),
            MapKind::Polynomial(p) => {
                if p.dim == 0 || p.dim >= linalg::MAX_DIM {
                    return Err(FlowError::InvalidSpec(format!(
                        "map dimension {} outside 1..{}",
                        p.dim,
                        linalg::MAX_DIM
                    )));
                }
                p.validate()
                    .map_err(|e| FlowError::InvalidSpec(format!("polynomial map: {e:?}")))
            }
        }
    }

    /// `f_t(x)` and `D f_t(x)`.
    pub fn apply(&self, x: &[f64], t: f64) -> (Vec<f64>, SquareMatrix) {
        let n = self.dim();
        let mut out = vec![0.0; n];
        let mut jac = vec![0.0; n * n];
        match &self.kind {
            MapKind::PeriodDoubling => {
                let (eta, deta) = period_doubling_bump(x[0]);
                let q = x[0] * x[0] - x[0] * t;
                out[0] = -x[0] + eta * q;
                out[1] = -2.0 * x[1];
                jac[0] = -1.0 + deta * q + eta * (2.0 * x[0] - t);
                jac[3] = -2.0;
            }
            MapKind::Polynomial(p) => p.eval_into(x, t, &mut out, Some(&mut jac)),
        }
        let jac = SquareMatrix::new(n, jac).unwrap_or_else(|_| SquareMatrix::zeros(n));
        (out, jac)
    }

    /// `f^k(x)` and its derivative by the chain rule.
    pub fn iterate(&self, x: &[f64], k: u32, t: f64) -> (Vec<f64>, SquareMatrix) {
        let mut y = x.to_vec();
        let mut d = SquareMatrix::identity(self.dim());
        for _ in 0..k {
            let (fy, dfy) = self.apply(&y, t);
            d = dfy.matmul(&d);
            y = fy;
        }
        (y, d)
    }

    /// The points `x, f(x), ..., f^{k-1}(x)`.
    pub fn orbit(&self, x: &[f64], k: u32, t: f64) -> Vec<Vec<f64>> {
        let mut pts = Vec::with_capacity(k as usize);
        let mut y = x.to_vec();
        for _ in 0..k {
            let next = self.apply(&y, t).0;
            pts.push(std::mem::replace(&mut y, next));
        }
        pts
    }
}

/// Smooth cutoff `eta` of the period-doubling map and its derivative.
pub fn period_doubling_bump(x: f64) -> (f64, f64) {
    let u = (40.0 - x.abs()) / 20.0;
    let (s, ds) = smooth_step(u);
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    (s / 100.0, -ds / 20.0 * sign / 100.0)
}

fn phi(u: f64) -> (f64, f64) {
    if u <= 0.0 {
        (0.0, 0.0)
    } else {
        let v = (-1.0 / u).exp();
        (v, v / (u * u))
    }
}

/// C-infinity step: 0 for `u <= 0`, 1 for `u >= 1`.
fn smooth_step(u: f64) -> (f64, f64) {
    if u <= 0.0 {
        return (0.0, 0.0);
    }
    if u >= 1.0 {
        return (1.0, 0.0);
    }
    let (a, da) = phi(u);
    let (b, db) = phi(1.0 - u);
    let s = a + b;
    (a / s, (da * b + a * db) / (s * s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_profile() {
        assert_eq!(period_doubling_bump(0.0), (0.01, 0.0));
        assert_eq!(period_doubling_bump(-19.5).0, 0.01);
        assert_eq!(period_doubling_bump(41.0), (0.0, 0.0));
        let (e, _) = period_doubling_bump(30.0);
        assert!(e > 0.0 && e < 0.01);
        let h = 1e-6;
        for x in [-35.0, -25.0, 22.0, 31.0, 38.0] {
            let fd = (period_doubling_bump(x + h).0 - period_doubling_bump(x - h).0) / (2.0 * h);
            assert!((fd - period_doubling_bump(x).1).abs() < 1e-8);
        }
    }

    #[test]
    fn linearization_at_origin() {
        let m = CylinderMap::period_doubling();
        let (y, d) = m.apply(&[0.0, 0.0], 1.0);
        assert_eq!(y, vec![0.0, 0.0]);
        assert_eq!(d, SquareMatrix::from_diag(&[-1.01, -2.0]));
    }

    #[test]
    fn period_two_points_swap() {
        let m = CylinderMap::period_doubling();
        let t: f64 = 1.0;
        // f(x) + x = (x^2 - x t) / 100 and f(f(x)) = x force x + f(x) = t
        let r = (t * t + 400.0 * t).sqrt();
        let xp = (t + r) / 2.0;
        let xm = (t - r) / 2.0;
        let (y, _) = m.apply(&[xp, 0.0], t);
        assert!((y[0] - xm).abs() < 1e-12);
        let (z, d2) = m.iterate(&[xp, 0.0], 2, t);
        assert!((z[0] - xp).abs() < 1e-12);
        let expected = 1.0 - t / 25.0 - (t / 100.0).powi(2);
        assert!((d2[(0, 0)] - expected).abs() < 1e-12);
        assert_eq!(d2[(1, 1)], 4.0);
    }
}
