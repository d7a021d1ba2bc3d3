use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::{
    flow_samples, flow_with_monodromy, CylinderMap, FieldSpec, FlowError, IntegratorOpts, Model,
};
use crate::linalg::{self, Lu, SquareMatrix};

/// Newton and bookkeeping controls for periodic orbit refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineOpts {
    pub integrator: IntegratorOpts,
    /// Converged once the shooting residual drops below this (scaled by `1 + |x|`).
    pub tol_orbit: f64,
    /// Accepted residual when Newton stagnates at integrator noise level.
    pub tol_stagnation: f64,
    pub max_iter: usize,
    pub samples: usize,
    /// Largest multiplicity examined by the minimal-period test.
    pub max_divisor: u32,
    /// Refinement gives up once the period exceeds this.
    pub s_limit: f64,
    /// Refinement gives up once the iterate leaves the ball of this radius.
    pub box_radius: f64,
}

impl Default for RefineOpts {
    fn default() -> Self {
        RefineOpts {
            integrator: IntegratorOpts::default(),
            tol_orbit: 1e-10,
            tol_stagnation: 1e-7,
            max_iter: 50,
            samples: 64,
            max_divisor: 64,
            s_limit: f64::INFINITY,
            box_radius: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RefineError {
    #[error("Newton iteration did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("converged to a constant orbit at a zero of the field")]
    CollapsedToZero {
        point: Vec<f64>,
        period: f64,
        /// The Jacobian at the zero has an eigenvalue near `(2 pi i / s) Z`,
        /// so the constant orbit is a candidate ghost.
        near_ghost: bool,
    },
    #[error("iterate left the admissible period or space range")]
    OutOfRange,
    #[error("initial guess sits at a zero of the field")]
    DegenerateGuess,
    #[error("monodromy does not fix the flow direction (relative residual {0:e})")]
    FlowDirectionNotPreserved(f64),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

impl RefineError {
    /// Outcomes that are expected for some seeds and do not count as failures.
    pub fn is_legitimate_rejection(&self) -> bool {
        matches!(self, RefineError::CollapsedToZero { .. })
    }
}

/// A refined embedded closed orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    pub base_point: Vec<f64>,
    pub minimal_period: f64,
    /// Points along one traversal, starting at the base point.
    pub samples: Vec<Vec<f64>>,
    /// Linearized flow over one minimal period.
    pub monodromy: SquareMatrix,
    /// Linearized return map on the normal space.
    pub holonomy: SquareMatrix,
    pub residual: f64,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Induced map of `monodromy` on `R^n / span(flow_dir, extra...)`, written in
/// an orthonormal basis of the orthogonal complement.
pub fn extract_holonomy_with(
    monodromy: &SquareMatrix,
    flow_dir: &[f64],
    extra_normals: &[Vec<f64>],
) -> Result<SquareMatrix, RefineError> {
    let nf = linalg::norm(flow_dir);
    if nf <= 1e-9 {
        return Err(RefineError::DegenerateGuess);
    }
    let mf = monodromy.mul_vec(flow_dir);
    let rel = mf
        .iter()
        .zip(flow_dir)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt()
        / nf;
    if rel > 1e-4 {
        return Err(RefineError::FlowDirectionNotPreserved(rel));
    }
    let mut span = vec![flow_dir.to_vec()];
    span.extend(extra_normals.iter().cloned());
    let q = linalg::orthonormal_complement(monodromy.dim(), &span);
    Ok(monodromy.compress(&q))
}

/// Induced map of `monodromy` on `R^n / span(flow_dir)`.
pub fn extract_holonomy(
    monodromy: &SquareMatrix,
    flow_dir: &[f64],
) -> Result<SquareMatrix, RefineError> {
    extract_holonomy_with(monodromy, flow_dir, &[])
}

struct Newton {
    x: Vec<f64>,
    s: f64,
    m: SquareMatrix,
    residual: f64,
}

fn shoot(
    field: &FieldSpec,
    x: &[f64],
    s: f64,
    t: f64,
    x_ref: &[f64],
    phase_dir: &[f64],
    opts: &IntegratorOpts,
) -> Result<(Vec<f64>, SquareMatrix, Vec<f64>), FlowError> {
    let (end, m) = flow_with_monodromy(field, x, s, Some(t), opts)?;
    let mut r: Vec<f64> = end.iter().zip(x).map(|(a, b)| a - b).collect();
    let phase: f64 = x
        .iter()
        .zip(x_ref)
        .zip(phase_dir)
        .map(|((a, b), v)| (a - b) * v)
        .sum();
    r.push(phase);
    Ok((end, m, r))
}

/// Single-shooting Newton on `(x, s)` for `F(s, x) = x` with the phase
/// condition `<x - x_ref, Y(x_ref)> = 0`.
fn newton_flow(
    field: &FieldSpec,
    x_guess: &[f64],
    s_guess: f64,
    t: f64,
    opts: &RefineOpts,
) -> Result<Newton, RefineError> {
    let n = field.ambient_dim;
    let mut x = x_guess.to_vec();
    field.project(&mut x);
    let x_ref = x.clone();
    let y_ref = field.value(&x_ref, t);
    let ny = linalg::norm(&y_ref);
    if ny < 1e-12 {
        return Err(RefineError::DegenerateGuess);
    }
    let phase_dir: Vec<f64> = y_ref.iter().map(|v| v / ny).collect();
    let mut s = s_guess;
    let (mut end, mut m, mut r) = shoot(field, &x, s, t, &x_ref, &phase_dir, &opts.integrator)?;
    let mut res = inf_norm(&r);
    let initial = res;
    for iter in 0..opts.max_iter {
        let scale = 1.0 + inf_norm(&x);
        if res < opts.tol_orbit * scale {
            return Ok(Newton { x, s, m, residual: res });
        }
        if iter == 12 && res > 0.5 * initial && res > opts.tol_stagnation * scale {
            break;
        }
        let y_end = field.value(&end, t);
        let k = n + 1;
        let mut a = vec![0.0; k * k];
        for i in 0..n {
            for j in 0..n {
                a[i * k + j] = m[(i, j)] - if i == j { 1.0 } else { 0.0 };
            }
            a[i * k + n] = y_end[i];
            a[n * k + i] = phase_dir[i];
        }
        let lu = Lu::factor_raw(k, a);
        if lu.is_singular() {
            break;
        }
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta = lu.solve(&rhs);
        if delta.iter().any(|v| !v.is_finite()) {
            break;
        }
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..8 {
            let mut xt: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + lambda * d).collect();
            field.project(&mut xt);
            let st = s + lambda * delta[n];
            if st <= 0.0 || st > opts.s_limit || inf_norm(&xt) > opts.box_radius {
                lambda *= 0.5;
                continue;
            }
            match shoot(field, &xt, st, t, &x_ref, &phase_dir, &opts.integrator) {
                Ok((e2, m2, r2)) => {
                    let res2 = inf_norm(&r2);
                    if res2 < (1.0 - 1e-4 * lambda) * res {
                        x = xt;
                        s = st;
                        end = e2;
                        m = m2;
                        r = r2;
                        res = res2;
                        accepted = true;
                        break;
                    }
                }
                Err(FlowError::BlowUp { .. }) | Err(FlowError::StepFailure { .. }) => {}
                Err(e) => return Err(e.into()),
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    // integration noise is amplified by the linearized flow
    let scale = (1.0 + inf_norm(&x)) * (1.0 + m.max_abs()).min(1e4);
    if res < opts.tol_stagnation * scale {
        return Ok(Newton { x, s, m, residual: res });
    }
    if s > opts.s_limit || inf_norm(&x) > opts.box_radius {
        return Err(RefineError::OutOfRange);
    }
    Err(RefineError::NoConvergence { residual: res })
}

fn collapse_check(field: &FieldSpec, x: &[f64], s: f64, t: f64, amplitude: f64) -> Option<RefineError> {
    let scale = 1.0 + inf_norm(x);
    if amplitude > 1e-6 * scale && linalg::norm(&field.value(x, t)) > 1e-9 * scale {
        return None;
    }
    let jet = field.jet_unchecked(x, t);
    let near_ghost = linalg::eigenvalues(&tangent_jacobian(field, x, &jet.jacobian))
        .map(|sp| {
            sp.upper_half_plane().iter().any(|z| {
                let k = (s * z.im / (2.0 * std::f64::consts::PI)).round();
                k >= 1.0 && (s * z.im - 2.0 * std::f64::consts::PI * k).abs() < 1e-3
            })
        })
        .unwrap_or(false);
    Some(RefineError::CollapsedToZero {
        point: x.to_vec(),
        period: s,
        near_ghost,
    })
}

/// Jacobian restricted to the constraint manifold, in an orthonormal tangent basis.
pub(crate) fn tangent_jacobian(field: &FieldSpec, x: &[f64], jac: &SquareMatrix) -> SquareMatrix {
    match field.sphere_radius() {
        Some(_) => jac.compress(&tangent_basis(x)),
        None => jac.clone(),
    }
}

pub(crate) fn tangent_basis(x: &[f64]) -> Vec<Vec<f64>> {
    linalg::orthonormal_complement(x.len(), &[x.to_vec()])
}

/// Refines a periodic orbit of `field` from a guess `(x_guess, s_guess)`.
///
/// The converged period is reduced to the minimal period by testing the
/// divisors `s / k` for `k <= max_divisor` and re-refining at the largest
/// multiplicity that returns. Strongly repelling orbits defeat forward
/// shooting; when it fails the orbit is refined for the time-reversed field
/// and the linearization inverted.
pub fn refine_orbit(
    field: &FieldSpec,
    x_guess: &[f64],
    s_guess: f64,
    t: Option<f64>,
    opts: &RefineOpts,
) -> Result<Orbit, RefineError> {
    match refine_directed(field, x_guess, s_guess, t, opts) {
        Err(e) if !e.is_legitimate_rejection() && !matches!(e, RefineError::DegenerateGuess) => {
            match refine_directed(&field.reversed(), x_guess, s_guess, t, opts) {
                Ok(back) => reverse_orbit(field, back).ok_or(e),
                Err(_) => Err(e),
            }
        }
        other => other,
    }
}

/// Converts an orbit of `-Y` into the same orbit of `Y`.
fn reverse_orbit(field: &FieldSpec, back: Orbit) -> Option<Orbit> {
    let k = back.samples.len();
    let samples: Vec<Vec<f64>> = (0..k).map(|j| back.samples[(k - j) % k].clone()).collect();
    let x = &back.base_point;
    let tangent: Vec<Vec<f64>> = match field.sphere_radius() {
        Some(_) => tangent_basis(x),
        None => (0..x.len())
            .map(|i| (0..x.len()).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect(),
    };
    let inv = back.monodromy.compress(&tangent).inverse().ok()?;
    let n = x.len();
    let mut monodromy = SquareMatrix::zeros(n);
    for (a, qa) in tangent.iter().enumerate() {
        for (b, qb) in tangent.iter().enumerate() {
            let c = inv[(a, b)];
            for i in 0..n {
                for j in 0..n {
                    monodromy[(i, j)] += c * qa[i] * qb[j];
                }
            }
        }
    }
    let holonomy = back.holonomy.inverse().ok()?;
    Some(Orbit {
        base_point: back.base_point,
        minimal_period: back.minimal_period,
        samples,
        monodromy,
        holonomy,
        residual: back.residual,
    })
}

fn refine_directed(
    field: &FieldSpec,
    x_guess: &[f64],
    s_guess: f64,
    t: Option<f64>,
    opts: &RefineOpts,
) -> Result<Orbit, RefineError> {
    let t = t.unwrap_or(0.0);
    field.check_point_loose(x_guess)?;
    if !(s_guess > 0.0 && s_guess.is_finite()) {
        return Err(RefineError::OutOfRange);
    }
    let mut sol = newton_flow(field, x_guess, s_guess, t, opts)?;
    let k = largest_return_divisor(field, &sol.x, sol.s, t, opts)?;
    if k > 1 {
        let sub = newton_flow(field, &sol.x, sol.s / k as f64, t, opts);
        match sub {
            Ok(s2) => sol = s2,
            Err(_) => return Err(RefineError::NoConvergence { residual: sol.residual }),
        }
    }
    let times: Vec<f64> = (0..opts.samples)
        .map(|j| sol.s * j as f64 / opts.samples as f64)
        .collect();
    let samples = flow_samples(field, &sol.x, &times, Some(t), &opts.integrator)?;
    let amplitude = samples
        .iter()
        .map(|p| inf_norm(&p.iter().zip(&sol.x).map(|(a, b)| a - b).collect::<Vec<_>>()))
        .fold(0.0f64, f64::max);
    if let Some(err) = collapse_check(field, &sol.x, sol.s, t, amplitude) {
        return Err(err);
    }
    let flow_dir = field.value(&sol.x, t);
    let extra: Vec<Vec<f64>> = field.sphere_radius().map(|_| sol.x.clone()).into_iter().collect();
    let holonomy = extract_holonomy_with(&sol.m, &flow_dir, &extra)?;
    Ok(Orbit {
        base_point: sol.x,
        minimal_period: sol.s,
        samples,
        monodromy: sol.m,
        holonomy,
        residual: sol.residual,
    })
}

fn largest_return_divisor(
    field: &FieldSpec,
    x: &[f64],
    s: f64,
    t: f64,
    opts: &RefineOpts,
) -> Result<u32, RefineError> {
    if opts.max_divisor < 2 {
        return Ok(1);
    }
    let ks: Vec<u32> = (2..=opts.max_divisor).rev().collect();
    let times: Vec<f64> = ks.iter().map(|&k| s / k as f64).collect();
    let pts = flow_samples(field, x, &times, Some(t), &opts.integrator)?;
    let tol = 1e-6 * (1.0 + inf_norm(x));
    let mut best = 1;
    for (k, p) in ks.iter().zip(&pts) {
        let d = inf_norm(&p.iter().zip(x).map(|(a, b)| a - b).collect::<Vec<_>>());
        if d < tol {
            best = best.max(*k);
        }
    }
    Ok(best)
}

/// Refines a periodic point of `map` with period dividing `m` from `x_guess`.
///
/// The suspension orbit through it has minimal period equal to the minimal
/// period of the point; its monodromy is `diag(1, D f^p)` in coordinates
/// `(theta, x)` and its holonomy is `D f^p`.
pub fn refine_periodic_point(
    map: &CylinderMap,
    x_guess: &[f64],
    m: u32,
    t: f64,
    opts: &RefineOpts,
) -> Result<Orbit, RefineError> {
    let n = map.dim();
    if x_guess.len() != n {
        return Err(FlowError::DimensionMismatch { expected: n, got: x_guess.len() }.into());
    }
    if m == 0 {
        return Err(RefineError::OutOfRange);
    }
    let (mut x, mut res) = newton_map(map, x_guess, m, t, opts)?;
    // a point converged for `f^m` may sit next to an orbit of smaller period;
    // re-solve at each proper divisor that nearly returns
    let mut p = m;
    for k in (1..m).filter(|k| m % k == 0) {
        let y = map.iterate(&x, k, t).0;
        if inf_norm(&y.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>()) > 1e-4 * (1.0 + inf_norm(&x)) {
            continue;
        }
        if let Ok((z, r)) = newton_map(map, &x, k, t, opts) {
            if inf_norm(&z.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-6 * (1.0 + inf_norm(&x)) {
                x = z;
                res = r;
                p = k;
                break;
            }
        }
    }
    let (_, dp) = map.iterate(&x, p, t);
    let samples = map.orbit(&x, p, t);
    let base_point = samples
        .iter()
        .min_by(|a, b| a.partial_cmp(b).unwrap())
        .cloned()
        .unwrap_or(x.clone());
    // re-base the linearization at the canonical point of the orbit
    let shift = samples.iter().position(|q| *q == base_point).unwrap_or(0);
    let samples: Vec<Vec<f64>> = (0..samples.len())
        .map(|j| samples[(j + shift) % samples.len()].clone())
        .collect();
    let holonomy = if shift == 0 { dp } else { map.iterate(&base_point, p, t).1 };
    let mut monodromy = SquareMatrix::zeros(n + 1);
    monodromy[(0, 0)] = 1.0;
    for i in 0..n {
        for j in 0..n {
            monodromy[(i + 1, j + 1)] = holonomy[(i, j)];
        }
    }
    Ok(Orbit {
        base_point,
        minimal_period: p as f64,
        samples,
        monodromy,
        holonomy,
        residual: res,
    })
}

/// Newton iteration for `f^m(x) = x` with a backtracking line search.
fn newton_map(map: &CylinderMap, x_guess: &[f64], m: u32, t: f64, opts: &RefineOpts) -> Result<(Vec<f64>, f64), RefineError> {
    let n = map.dim();
    let mut x = x_guess.to_vec();
    let residual_at = |x: &[f64]| -> (Vec<f64>, SquareMatrix, f64) {
        let (y, d) = map.iterate(x, m, t);
        let r: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
        let res = inf_norm(&r);
        (r, d, res)
    };
    let (mut r, mut d, mut res) = residual_at(&x);
    let mut converged = false;
    for _ in 0..opts.max_iter {
        if !res.is_finite() {
            break;
        }
        if res < opts.tol_orbit * (1.0 + inf_norm(&x)) {
            converged = true;
            break;
        }
        let a = d.shift(-1.0);
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let Some(delta) = linalg::solve(n, a.entries().to_vec(), &rhs) else {
            break;
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..10 {
            let xt: Vec<f64> = x.iter().zip(&delta).map(|(a, b)| a + lambda * b).collect();
            if inf_norm(&xt) <= opts.box_radius {
                let (r2, d2, res2) = residual_at(&xt);
                if res2.is_finite() && res2 < (1.0 - 1e-4 * lambda) * res {
                    x = xt;
                    r = r2;
                    d = d2;
                    res = res2;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            converged = res < opts.tol_stagnation * (1.0 + inf_norm(&x));
            break;
        }
    }
    if !converged {
        if inf_norm(&x) > opts.box_radius {
            return Err(RefineError::OutOfRange);
        }
        return Err(RefineError::NoConvergence { residual: res });
    }
    Ok((x, res))
}

/// Refinement dispatch over models; for maps the period guess is rounded.
pub fn refine_model(
    model: &Model,
    x_guess: &[f64],
    s_guess: f64,
    t: Option<f64>,
    opts: &RefineOpts,
) -> Result<Orbit, RefineError> {
    match model {
        Model::Flow(f) => refine_orbit(f, x_guess, s_guess, t, opts),
        Model::Cylinder(map) => {
            let m = s_guess.round().max(1.0) as u32;
            refine_periodic_point(map, x_guess, m, t.unwrap_or(0.0), opts)
        }
    }
}
