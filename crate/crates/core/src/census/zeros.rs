use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::refine::{tangent_basis, tangent_jacobian};
use super::{Region, Window};
use crate::flow::FieldSpec;
use crate::holonomy::weight_ghost;
use crate::linalg::{self, Lu, SquareMatrix, Spectrum};

/// A zero of the field with its (tangent-restricted) Jacobian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroRec {
    pub point: Vec<f64>,
    /// Jacobian on the tangent space of the constraint (the full Jacobian
    /// when unconstrained), in the basis `tangent_basis`.
    pub jacobian: SquareMatrix,
    pub spectrum: Spectrum,
    pub tangent_basis: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GhostKind {
    Ghost,
    Boundary,
}

/// A zero decorated with an invariant plane, a degree and the matching period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhostOrbitRec {
    pub zero_id: usize,
    pub zero: Vec<f64>,
    pub eigenvalue: Complex64,
    pub plane_basis: [Vec<f64>; 2],
    pub trace: f64,
    pub degree: u32,
    pub period: f64,
    /// `None` when the zero is not a super-rigid ghost.
    pub weight: Option<i32>,
    pub kind: GhostKind,
    /// Signed distance of the zero to the region boundary (positive inside).
    pub margin: f64,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Newton refinement of a zero, staying on the constraint sphere if present.
pub fn refine_zero(field: &FieldSpec, x_guess: &[f64], t: f64, box_radius: f64) -> Option<Vec<f64>> {
    let n = field.ambient_dim;
    let mut x = x_guess.to_vec();
    field.project(&mut x);
    let r2 = field.sphere_radius().map(|r| r * r);
    let mut jet = field.jet_unchecked(&x, t);
    let mut res = inf_norm(&jet.value);
    for _ in 0..60 {
        let scale = 1.0 + inf_norm(&x);
        if res < 1e-13 * scale {
            return Some(x);
        }
        let mut a = jet.jacobian.entries().to_vec();
        if let Some(r2) = r2 {
            for i in 0..n {
                for j in 0..n {
                    a[i * n + j] += x[i] * x[j] / r2;
                }
            }
        }
        let lu = Lu::factor_raw(n, a);
        if lu.is_singular() {
            break;
        }
        let delta = lu.solve(&jet.value.iter().map(|v| -v).collect::<Vec<_>>());
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let mut xt: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + lambda * d).collect();
            field.project(&mut xt);
            if inf_norm(&xt) <= box_radius {
                let jt = field.jet_unchecked(&xt, t);
                let rt = inf_norm(&jt.value);
                if rt.is_finite() && rt < (1.0 - 1e-4 * lambda) * res {
                    x = xt;
                    jet = jt;
                    res = rt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (res < 1e-10 * (1.0 + inf_norm(&x))).then_some(x)
}

/// Zeros of `field` inside `region`, Newton-refined from `seeds` and
/// deduplicated at `tol_dedup`. Returns the zeros and the number of seeds
/// whose Newton iteration failed.
pub fn find_zeros(
    field: &FieldSpec,
    region: &Region,
    t: Option<f64>,
    seeds: &[Vec<f64>],
    tol_dedup: f64,
) -> (Vec<ZeroRec>, usize) {
    let t = t.unwrap_or(0.0);
    let box_radius = 4.0 * region.bounding_radius() + 1.0;
    let mut zeros: Vec<ZeroRec> = Vec::new();
    let mut failures = 0;
    for s in seeds {
        let Some(x) = refine_zero(field, s, t, box_radius) else {
            failures += 1;
            continue;
        };
        if !region.contains(&x) {
            continue;
        }
        if zeros
            .iter()
            .any(|z| linalg::norm(&sub(&z.point, &x)) < tol_dedup)
        {
            continue;
        }
        if let Some(z) = zero_record(field, &x, t) {
            zeros.push(z);
        }
    }
    zeros.sort_by(|a, b| a.point.partial_cmp(&b.point).unwrap());
    (zeros, failures)
}

pub(crate) fn zero_record(field: &FieldSpec, x: &[f64], t: f64) -> Option<ZeroRec> {
    let jet = field.jet_unchecked(x, t);
    let jacobian = tangent_jacobian(field, x, &jet.jacobian);
    let spectrum = linalg::eigenvalues(&jacobian).ok()?;
    Some(ZeroRec {
        point: x.to_vec(),
        jacobian,
        spectrum,
        tangent_basis: field.sphere_radius().map(|_| tangent_basis(x)),
    })
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Orthonormal basis `(u, w)` of the real invariant plane of `jac` belonging
/// to the eigenvalue pair `(lambda, conj lambda)`, by inverse iteration on the
/// real `2k x 2k` form of `jac - lambda`.
pub fn invariant_plane(jac: &SquareMatrix, lambda: Complex64) -> Option<[Vec<f64>; 2]> {
    let k = jac.dim();
    let (a, b) = (lambda.re, lambda.im);
    let eps = 1e-10 * (1.0 + lambda.norm());
    let m = 2 * k;
    let mut big = vec![0.0; m * m];
    for i in 0..k {
        for j in 0..k {
            big[i * m + j] = jac[(i, j)];
            big[(i + k) * m + (j + k)] = jac[(i, j)];
        }
        big[i * m + i] -= a + eps;
        big[(i + k) * m + (i + k)] -= a + eps;
        big[i * m + (i + k)] = b;
        big[(i + k) * m + i] = -b;
    }
    let lu = Lu::factor_raw(m, big);
    if lu.is_singular() {
        return None;
    }
    let mut v: Vec<f64> = (0..m).map(|i| 1.0 + 0.1 * i as f64).collect();
    for _ in 0..4 {
        v = lu.solve(&v);
        let nv = linalg::norm(&v);
        if !(nv.is_finite() && nv > 0.0) {
            return None;
        }
        v.iter_mut().for_each(|x| *x /= nv);
    }
    let u = v[..k].to_vec();
    let w = v[k..].to_vec();
    let nu = linalg::norm(&u);
    if nu < 1e-12 {
        return None;
    }
    let e1: Vec<f64> = u.iter().map(|x| x / nu).collect();
    let c = linalg::dot(&w, &e1);
    let w2: Vec<f64> = w.iter().zip(&e1).map(|(x, e)| x - c * e).collect();
    let nw = linalg::norm(&w2);
    if nw < 1e-12 {
        return None;
    }
    Some([e1, w2.iter().map(|x| x / nw).collect()])
}

/// Residual of `span(basis)` as an invariant subspace of `jac`.
pub fn plane_residual(jac: &SquareMatrix, basis: &[Vec<f64>; 2]) -> f64 {
    basis
        .iter()
        .map(|v| {
            let jv = jac.mul_vec(v);
            let mut r = jv.clone();
            for e in basis {
                let c = linalg::dot(&jv, e);
                r.iter_mut().zip(e).for_each(|(ri, ei)| *ri -= c * ei);
            }
            linalg::norm(&r)
        })
        .fold(0.0, f64::max)
}

/// Ghost and boundary orbits at the given zeros inside `window`.
///
/// Returns the records together with the number of zeros that failed the
/// super-rigidity check (their records carry no weight).
pub fn enumerate_ghosts(
    zeros: &[ZeroRec],
    window: &Window,
    tol_trace: f64,
) -> (Vec<GhostOrbitRec>, usize) {
    let mut out = Vec::new();
    let mut rigidity_failures = 0;
    for (zero_id, z) in zeros.iter().enumerate() {
        let mut zero_failed = false;
        for lambda in z.spectrum.upper_half_plane() {
            let trace = 2.0 * lambda.re;
            if trace > tol_trace {
                continue;
            }
            let kind = if trace.abs() < tol_trace {
                GhostKind::Boundary
            } else {
                GhostKind::Ghost
            };
            let Some(plane) = invariant_plane(&z.jacobian, lambda) else {
                continue;
            };
            let plane = match &z.tangent_basis {
                Some(q) => plane.map(|v| lift(q, &v)),
                None => plane,
            };
            let margin = window.region.margin(&z.point);
            let mut d = 1u32;
            loop {
                let period = 2.0 * PI * d as f64 / lambda.im;
                if period > window.s_max || window.degree_max.is_some_and(|m| d > m) {
                    break;
                }
                let weight = match weight_ghost(&z.jacobian, d) {
                    Ok(w) => Some(w),
                    Err(_) => {
                        zero_failed = true;
                        None
                    }
                };
                out.push(GhostOrbitRec {
                    zero_id,
                    zero: z.point.clone(),
                    eigenvalue: lambda,
                    plane_basis: plane.clone(),
                    trace,
                    degree: d,
                    period,
                    weight,
                    kind,
                    margin,
                });
                d += 1;
            }
        }
        if zero_failed {
            rigidity_failures += 1;
        }
    }
    (out, rigidity_failures)
}

/// Coordinates in a tangent basis mapped back to the ambient space.
fn lift(basis: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let n = basis[0].len();
    let mut out = vec![0.0; n];
    for (c, b) in v.iter().zip(basis) {
        out.iter_mut().zip(b).for_each(|(o, bi)| *o += c * bi);
    }
    out
}
