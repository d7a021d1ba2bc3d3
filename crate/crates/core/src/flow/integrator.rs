use serde::{Deserialize, Serialize};

use super::{FieldSpec, FlowError};
use crate::linalg::{self, SquareMatrix};

/// Step control for the Dormand-Prince 5(4) integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorOpts {
    /// Mixed absolute/relative local error tolerance per step.
    pub tol: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Integration fails with `BlowUp` once any coordinate exceeds this.
    pub bounding_box: f64,
}

impl Default for IntegratorOpts {
    fn default() -> Self {
        IntegratorOpts {
            tol: 1e-10,
            h_min: 1e-12,
            h_max: 0.1,
            bounding_box: 1e3,
        }
    }
}

impl IntegratorOpts {
    pub fn with_tol(self, tol: f64) -> Self {
        IntegratorOpts { tol, ..self }
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Autonomous right-hand side for the augmented state `[x, vec(M)]`.
struct System<'a> {
    field: &'a FieldSpec,
    t: f64,
    n: usize,
    variational: bool,
    value: Vec<f64>,
    jac: Vec<f64>,
}

impl System<'_> {
    fn len(&self) -> usize {
        if self.variational {
            self.n + self.n * self.n
        } else {
            self.n
        }
    }

    fn rhs(&mut self, y: &[f64], dy: &mut [f64]) {
        let n = self.n;
        let x = &y[..n];
        if !self.variational {
            self.field.eval_into(x, self.t, &mut dy[..n], None);
            return;
        }
        self.field
            .eval_into(x, self.t, &mut self.value, Some(&mut self.jac));
        dy[..n].copy_from_slice(&self.value);
        let m = &y[n..];
        let dm = &mut dy[n..];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += self.jac[i * n + k] * m[k * n + j];
                }
                dm[i * n + j] = acc;
            }
        }
    }
}

/// Dormand-Prince 5(4) stepper with PI step-size control and FSAL reuse.
struct Stepper<'a> {
    sys: System<'a>,
    opts: IntegratorOpts,
    h: f64,
    err_prev: f64,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    fsal_valid: bool,
}

impl<'a> Stepper<'a> {
    fn new(sys: System<'a>, opts: IntegratorOpts) -> Self {
        let len = sys.len();
        Stepper {
            sys,
            opts,
            h: 0.0,
            err_prev: 1e-4,
            k: std::array::from_fn(|_| vec![0.0; len]),
            tmp: vec![0.0; len],
            y_new: vec![0.0; len],
            fsal_valid: false,
        }
    }

    fn initial_step(&mut self, y: &[f64]) -> f64 {
        let n = self.sys.n;
        let d0 = linalg::norm(&y[..n]).max(1e-5);
        let d1 = linalg::norm(&self.k[0][..n]).max(1e-5);
        let h = 0.01 * d0 / d1;
        h.clamp(self.opts.h_min.max(1e-6), self.opts.h_max)
            * self.opts.tol.powf(0.2).clamp(1e-3, 1.0)
            * 10.0
    }

    /// Advances `y` (at elapsed time `time`) by `duration`, landing exactly on
    /// the end point. Calls `project` after every accepted step.
    fn advance(
        &mut self,
        y: &mut [f64],
        time: &mut f64,
        duration: f64,
        project: &mut dyn FnMut(&mut [f64]),
    ) -> Result<(), FlowError> {
        if duration <= 0.0 {
            return Ok(());
        }
        let end = *time + duration;
        if !self.fsal_valid {
            let mut k0 = std::mem::take(&mut self.k[0]);
            self.sys.rhs(y, &mut k0);
            self.k[0] = k0;
            self.fsal_valid = true;
        }
        if self.h <= 0.0 {
            self.h = self.initial_step(y);
        }
        let n = self.sys.n;
        let len = y.len();
        loop {
            let remaining = end - *time;
            if remaining <= 1e-15 * end.abs().max(1.0) {
                *time = end;
                return Ok(());
            }
            let last = self.h >= remaining;
            let h = if last { remaining } else { self.h };
            let err = self.try_step(y, h);
            if !err.is_finite() {
                self.h *= 0.2;
                self.check_min_step(*time, remaining)?;
                continue;
            }
            if err <= 1.0 {
                y.copy_from_slice(&self.y_new);
                project(y);
                if y[..n].iter().any(|v| v.abs() > self.opts.bounding_box || !v.is_finite()) {
                    return Err(FlowError::BlowUp { time: *time + h });
                }
                *time += h;
                self.k.swap(0, 6);
                // projection may move the state; the FSAL stage must follow it
                if self.sys.field.sphere_radius().is_some() {
                    let mut k0 = std::mem::take(&mut self.k[0]);
                    self.sys.rhs(y, &mut k0);
                    self.k[0] = k0;
                }
                let e = err.max(1e-10);
                let fac = (0.9 * e.powf(-0.17) * self.err_prev.powf(0.04)).clamp(0.2, 10.0);
                self.err_prev = e;
                if !last {
                    self.h = (h * fac).min(self.opts.h_max);
                } else {
                    self.h = self.h.max(h * fac).min(self.opts.h_max);
                }
                if last {
                    *time = end;
                    debug_assert_eq!(y.len(), len);
                    return Ok(());
                }
            } else {
                let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                self.h = h * fac;
                self.check_min_step(*time, remaining)?;
            }
        }
    }

    fn check_min_step(&self, time: f64, remaining: f64) -> Result<(), FlowError> {
        if self.h < self.opts.h_min && self.h < remaining {
            Err(FlowError::StepFailure { time })
        } else {
            Ok(())
        }
    }

    /// One trial step of size `h`; fills `y_new` and `k[6]`, returns the
    /// scaled error norm (accept when <= 1).
    fn try_step(&mut self, y: &[f64], h: f64) -> f64 {
        let len = y.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let tmp = &mut self.tmp;
        for i in 0..len {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        self.sys.rhs(tmp, k2);
        for i in 0..len {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        self.sys.rhs(tmp, k3);
        for i in 0..len {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        self.sys.rhs(tmp, k4);
        for i in 0..len {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        self.sys.rhs(tmp, k5);
        for i in 0..len {
            tmp[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        self.sys.rhs(tmp, k6);
        let y_new = &mut self.y_new;
        for i in 0..len {
            y_new[i] = y[i]
                + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        self.sys.rhs(y_new, k7);
        let tol = self.opts.tol;
        let mut err: f64 = 0.0;
        for i in 0..len {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol * (1.0 + y[i].abs().max(y_new[i].abs()));
            err = err.max((e / sc).abs());
        }
        err
    }
}

fn validate_call(field: &FieldSpec, x0: &[f64], s: f64, t: f64) -> Result<(), FlowError> {
    field.check_point(x0)?;
    if !s.is_finite() || !t.is_finite() {
        return Err(FlowError::NonFinite);
    }
    if s < 0.0 {
        return Err(FlowError::NegativeDuration(s));
    }
    Ok(())
}

fn renormalizer(field: &FieldSpec, n: usize) -> impl FnMut(&mut [f64]) + '_ {
    move |y: &mut [f64]| field.project(&mut y[..n])
}

/// Integrates the flow and its variational equation for time `s`.
///
/// Returns the end point and the monodromy `d_{x0} F(s, .)`. On a sphere
/// constraint the monodromy is `P(x_end) M P(x0)` with `P` the orthogonal
/// projection onto the tangent space, so it maps tangent vectors to tangent
/// vectors and annihilates the radial direction.
pub fn flow_with_monodromy(
    field: &FieldSpec,
    x0: &[f64],
    s: f64,
    t: Option<f64>,
    opts: &IntegratorOpts,
) -> Result<(Vec<f64>, SquareMatrix), FlowError> {
    let t = t.unwrap_or(0.0);
    validate_call(field, x0, s, t)?;
    let n = field.ambient_dim;
    let mut y = vec![0.0; n + n * n];
    y[..n].copy_from_slice(x0);
    for i in 0..n {
        y[n + i * n + i] = 1.0;
    }
    let sys = System {
        field,
        t,
        n,
        variational: true,
        value: vec![0.0; n],
        jac: vec![0.0; n * n],
    };
    let mut stepper = Stepper::new(sys, *opts);
    let mut time = 0.0;
    let mut proj = renormalizer(field, n);
    stepper.advance(&mut y, &mut time, s, &mut proj)?;
    let x_end = y[..n].to_vec();
    let mut m = SquareMatrix::new(n, y[n..].to_vec()).map_err(|_| FlowError::NonFinite)?;
    if let Some(r) = field.sphere_radius() {
        m = tangent_projector(&x_end, r)
            .matmul(&m)
            .matmul(&tangent_projector(x0, r));
    }
    Ok((x_end, m))
}

/// `I - x x^T / R^2`.
fn tangent_projector(x: &[f64], r: f64) -> SquareMatrix {
    let n = x.len();
    let mut p = SquareMatrix::identity(n);
    let r2 = r * r;
    let mut e = p.entries().to_vec();
    for i in 0..n {
        for j in 0..n {
            e[i * n + j] -= x[i] * x[j] / r2;
        }
    }
    p = SquareMatrix::new(n, e).expect("finite projector");
    p
}

/// End point of the flow after time `s`, without the variational equation.
pub fn flow_state(
    field: &FieldSpec,
    x0: &[f64],
    s: f64,
    t: Option<f64>,
    opts: &IntegratorOpts,
) -> Result<Vec<f64>, FlowError> {
    Ok(flow_samples(field, x0, &[s], t, opts)?.pop().expect("one sample"))
}

/// States at the given non-decreasing times, from a single integration pass.
pub fn flow_samples(
    field: &FieldSpec,
    x0: &[f64],
    times: &[f64],
    t: Option<f64>,
    opts: &IntegratorOpts,
) -> Result<Vec<Vec<f64>>, FlowError> {
    let (out, err) = flow_samples_partial(field, x0, times, t, opts)?;
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Like [`flow_samples`], but on a mid-course failure returns the samples
/// reached so far together with the error.
pub fn flow_samples_partial(
    field: &FieldSpec,
    x0: &[f64],
    times: &[f64],
    t: Option<f64>,
    opts: &IntegratorOpts,
) -> Result<(Vec<Vec<f64>>, Option<FlowError>), FlowError> {
    let t = t.unwrap_or(0.0);
    let last = times.last().copied().unwrap_or(0.0);
    validate_call(field, x0, last, t)?;
    if times.iter().any(|s| *s < 0.0 || !s.is_finite()) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(FlowError::InvalidSpec("sample times must be sorted and non-negative".into()));
    }
    let n = field.ambient_dim;
    let sys = System {
        field,
        t,
        n,
        variational: false,
        value: Vec::new(),
        jac: Vec::new(),
    };
    let mut stepper = Stepper::new(sys, *opts);
    let mut y = x0.to_vec();
    let mut time = 0.0;
    let mut proj = renormalizer(field, n);
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        let duration = target - time;
        if let Err(e) = stepper.advance(&mut y, &mut time, duration, &mut proj) {
            return Ok((out, Some(e)));
        }
        out.push(y.clone());
    }
    Ok((out, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{PolynomialField, Term};
    use std::f64::consts::PI;

    fn opts() -> IntegratorOpts {
        IntegratorOpts::default()
    }

    #[test]
    fn hopf_returns_after_two_pi() {
        let f = FieldSpec::hopf();
        let x0 = [0.6, 0.0, 0.0, 0.8];
        let (x, m) = flow_with_monodromy(&f, &x0, 2.0 * PI, None, &opts()).unwrap();
        for (a, b) in x.iter().zip(&x0) {
            assert!((a - b).abs() < 1e-8);
        }
        let p = tangent_projector(&x0, 1.0);
        assert!(m.sub(&p).max_abs() < 1e-7);
    }

    #[test]
    fn linear_field_matches_matrix_exponential() {
        // A = [[-0.3, 1], [-1, -0.3]] has exp(sA) = e^{-0.3 s} R(-s)
        let f = FieldSpec::polynomial(PolynomialField::linear(&[
            vec![-0.3, 1.0],
            vec![-1.0, -0.3],
        ]));
        let s = 2.7;
        let (_, m) = flow_with_monodromy(&f, &[1.0, 0.5], s, None, &opts()).unwrap();
        let expected = SquareMatrix::rotation(-s).scale((-0.3 * s).exp());
        assert!(m.sub(&expected).max_abs() < 1e-8);
    }

    #[test]
    fn zero_duration_is_identity() {
        let f = FieldSpec::planar_plus();
        let (x, m) = flow_with_monodromy(&f, &[0.2, 0.1], 0.0, Some(0.3), &opts()).unwrap();
        assert_eq!(x, vec![0.2, 0.1]);
        assert_eq!(m, SquareMatrix::identity(2));
    }

    #[test]
    fn blow_up_is_reported() {
        let mut p = PolynomialField::zero(1);
        p.push(0, Term::constant(1.0, vec![2]));
        let f = FieldSpec::polynomial(p);
        assert!(matches!(
            flow_with_monodromy(&f, &[1.0], 2.0, None, &opts()),
            Err(FlowError::BlowUp { .. })
        ));
    }

    #[test]
    fn samples_agree_with_separate_runs() {
        let f = FieldSpec::planar_minus();
        let x0 = [0.4, 0.0];
        let got = flow_samples(&f, &x0, &[0.5, 1.5, 3.0], Some(-0.1), &opts()).unwrap();
        for (s, g) in [0.5, 1.5, 3.0].iter().zip(&got) {
            let x = flow_state(&f, &x0, *s, Some(-0.1), &opts()).unwrap();
            for (a, b) in x.iter().zip(g) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
