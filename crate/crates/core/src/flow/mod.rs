//! Vector fields on Euclidean charts, their flows and variational equations,
//! and the return maps of mapping-cylinder fields.

mod cylinder;
mod integrator;
mod polynomial;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, SquareMatrix};

pub use cylinder::{period_doubling_bump, CylinderMap, MapKind};
pub use integrator::{
    flow_samples, flow_samples_partial, flow_state, flow_with_monodromy, IntegratorOpts,
};
pub use polynomial::{PolynomialField, Term};

/// Tolerance on `| |x| - R |` for points declared to lie on a sphere constraint.
pub const ON_SPHERE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("point is off the constraint sphere by {0:e}")]
    OffManifold(f64),
    #[error("trajectory left the bounding box at time {time}")]
    BlowUp { time: f64 },
    #[error("step size underflow at time {time}")]
    StepFailure { time: f64 },
    #[error("point has dimension {got}, field expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite input")]
    NonFinite,
    #[error("invalid field specification: {0}")]
    InvalidSpec(String),
    #[error("duration must be non-negative, got {0}")]
    NegativeDuration(f64),
}

/// Named vector fields from the scenario catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    /// `(x, y) -> (i x, i y)` on C^2 = R^4.
    Hopf,
    /// `(x, y) -> (i a x, i b y)` on C^2 = R^4; params `a`, `b`, optional
    /// `a_slope`, `b_slope` make `a` and `b` affine in the family parameter.
    HopfAb,
    /// `z -> (-t + i + |z|^2) z` on C = R^2.
    PlanarPlus,
    /// `z -> (-t + i - |z|^2) z` on C = R^2.
    PlanarMinus,
}

impl Builtin {
    pub fn name(&self) -> &'static str {
        match self {
            Builtin::Hopf => "hopf",
            Builtin::HopfAb => "hopf_ab",
            Builtin::PlanarPlus => "planar_plus",
            Builtin::PlanarMinus => "planar_minus",
        }
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        Some(match name {
            "hopf" => Builtin::Hopf,
            "hopf_ab" => Builtin::HopfAb,
            "planar_plus" => Builtin::PlanarPlus,
            "planar_minus" => Builtin::PlanarMinus,
            _ => return None,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Builtin::Hopf | Builtin::HopfAb => 4,
            Builtin::PlanarPlus | Builtin::PlanarMinus => 2,
        }
    }

    fn default_constraint(&self) -> Option<Constraint> {
        match self {
            Builtin::Hopf | Builtin::HopfAb => Some(Constraint::Sphere { radius: 1.0 }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Builtin(Builtin),
    Polynomial(PolynomialField),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    Sphere { radius: f64 },
}

/// Declarative description of a vector field, or of a one-parameter family
/// of vector fields when the coefficients depend on `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub ambient_dim: usize,
    pub kind: FieldKind,
    pub constraint: Option<Constraint>,
    pub params: BTreeMap<String, f64>,
    /// Evaluates `-Y` instead of `Y`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reversed: bool,
}

/// Value and Jacobian of a field at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub point: Vec<f64>,
    pub value: Vec<f64>,
    pub jacobian: SquareMatrix,
}

impl FieldSpec {
    pub fn builtin(b: Builtin, params: &[(&str, f64)]) -> FieldSpec {
        FieldSpec {
            ambient_dim: b.ambient_dim(),
            constraint: b.default_constraint(),
            kind: FieldKind::Builtin(b),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            reversed: false,
        }
    }

    pub fn polynomial(p: PolynomialField) -> FieldSpec {
        FieldSpec {
            ambient_dim: p.dim,
            kind: FieldKind::Polynomial(p),
            constraint: None,
            params: BTreeMap::new(),
            reversed: false,
        }
    }

    pub fn with_sphere(mut self, radius: f64) -> FieldSpec {
        self.constraint = Some(Constraint::Sphere { radius });
        self
    }

    pub fn hopf() -> FieldSpec {
        FieldSpec::builtin(Builtin::Hopf, &[])
    }

    pub fn hopf_ab(a: f64, b: f64) -> FieldSpec {
        FieldSpec::builtin(Builtin::HopfAb, &[("a", a), ("b", b)])
    }

    pub fn planar_plus() -> FieldSpec {
        FieldSpec::builtin(Builtin::PlanarPlus, &[])
    }

    pub fn planar_minus() -> FieldSpec {
        FieldSpec::builtin(Builtin::PlanarMinus, &[])
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    pub fn sphere_radius(&self) -> Option<f64> {
        self.constraint.map(|Constraint::Sphere { radius }| radius)
    }

    /// Structural checks performed once when a specification is loaded.
    pub fn validate(&self) -> Result<(), FlowError> {
        if self.ambient_dim == 0 || self.ambient_dim > linalg::MAX_DIM {
            return Err(FlowError::InvalidSpec(format!(
                "ambient dimension {} outside 1..={}",
                self.ambient_dim,
                linalg::MAX_DIM
            )));
        }
        match &self.kind {
            FieldKind::Builtin(b) => {
                if b.ambient_dim() != self.ambient_dim {
                    return Err(FlowError::InvalidSpec(format!(
                        "builtin {} lives in dimension {}",
                        b.name(),
                        b.ambient_dim()
                    )));
                }
                if *b == Builtin::HopfAb {
                    for key in ["a", "b"] {
                        if self.param(key).is_none() {
                            return Err(FlowError::InvalidSpec(format!(
                                "hopf_ab requires parameter `{key}`"
                            )));
                        }
                    }
                }
            }
            FieldKind::Polynomial(p) => {
                if p.dim != self.ambient_dim {
                    return Err(FlowError::InvalidSpec("polynomial dimension mismatch".into()));
                }
                p.validate()
                    .map_err(|e| FlowError::InvalidSpec(format!("polynomial: {e:?}")))?;
            }
        }
        if self.params.values().any(|v| !v.is_finite()) {
            return Err(FlowError::InvalidSpec("non-finite parameter".into()));
        }
        if let Some(r) = self.sphere_radius() {
            if !(r > 0.0 && r.is_finite()) {
                return Err(FlowError::InvalidSpec("sphere radius must be positive".into()));
            }
        }
        Ok(())
    }

    /// Raw ambient field (before any tangential projection).
    fn eval_ambient(&self, x: &[f64], t: f64, out: &mut [f64], mut jac: Option<&mut [f64]>) {
        match &self.kind {
            FieldKind::Polynomial(p) => p.eval_into(x, t, out, jac.as_deref_mut()),
            FieldKind::Builtin(b) => eval_builtin(b, &self.params, x, t, out, jac.as_deref_mut()),
        }
        if self.reversed {
            out.iter_mut().for_each(|v| *v = -*v);
            if let Some(j) = jac {
                j.iter_mut().for_each(|v| *v = -*v);
            }
        }
    }

    /// The same field with time reversed.
    pub fn reversed(&self) -> FieldSpec {
        FieldSpec {
            reversed: !self.reversed,
            ..self.clone()
        }
    }

    /// Effective field used for integration. On a sphere constraint the
    /// ambient field is projected onto the tangent space,
    /// `Y - <x, Y> x / R^2`, which keeps every sphere `|x| = R` invariant.
    pub(crate) fn eval_into(&self, x: &[f64], t: f64, out: &mut [f64], jac: Option<&mut [f64]>) {
        let n = self.ambient_dim;
        let Some(r) = self.sphere_radius() else {
            self.eval_ambient(x, t, out, jac);
            return;
        };
        let r2 = r * r;
        match jac {
            None => {
                self.eval_ambient(x, t, out, None);
                let c = linalg::dot(x, out) / r2;
                for (o, xi) in out.iter_mut().zip(x) {
                    *o -= c * xi;
                }
            }
            Some(j) => {
                self.eval_ambient(x, t, out, Some(&mut *j));
                let xy = linalg::dot(x, out);
                // row vector g = Y^T + x^T DY
                let mut g = vec![0.0; n];
                for (k, gk) in g.iter_mut().enumerate() {
                    *gk = out[k] + (0..n).map(|i| x[i] * j[i * n + k]).sum::<f64>();
                }
                for i in 0..n {
                    for k in 0..n {
                        j[i * n + k] -= x[i] * g[k] / r2;
                    }
                    j[i * n + i] -= xy / r2;
                }
                for (o, xi) in out.iter_mut().zip(x) {
                    *o -= xy / r2 * xi;
                }
            }
        }
    }

    pub(crate) fn value(&self, x: &[f64], t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.ambient_dim];
        self.eval_into(x, t, &mut out, None);
        out
    }

    pub(crate) fn jet_unchecked(&self, x: &[f64], t: f64) -> Jet {
        let n = self.ambient_dim;
        let mut value = vec![0.0; n];
        let mut jac = vec![0.0; n * n];
        self.eval_into(x, t, &mut value, Some(&mut jac));
        Jet {
            point: x.to_vec(),
            value,
            jacobian: SquareMatrix::new(n, jac).unwrap_or_else(|_| SquareMatrix::zeros(n)),
        }
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<(), FlowError> {
        if x.len() != self.ambient_dim {
            return Err(FlowError::DimensionMismatch {
                expected: self.ambient_dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(FlowError::NonFinite);
        }
        if let Some(r) = self.sphere_radius() {
            let off = (linalg::norm(x) - r).abs();
            if off > ON_SPHERE_TOL {
                return Err(FlowError::OffManifold(off));
            }
        }
        Ok(())
    }

    /// Dimension and finiteness checks only; the point may be off the sphere.
    pub(crate) fn check_point_loose(&self, x: &[f64]) -> Result<(), FlowError> {
        if x.len() != self.ambient_dim {
            return Err(FlowError::DimensionMismatch {
                expected: self.ambient_dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(FlowError::NonFinite);
        }
        Ok(())
    }

    /// Projects a point radially onto the constraint sphere, if any.
    pub fn project(&self, x: &mut [f64]) {
        if let Some(r) = self.sphere_radius() {
            let nx = linalg::norm(x);
            if nx > 0.0 {
                x.iter_mut().for_each(|v| *v *= r / nx);
            }
        }
    }
}

/// Value and analytic Jacobian of `field` at `x`, with family parameter `t`
/// (zero when absent).
pub fn evaluate(field: &FieldSpec, x: &[f64], t: Option<f64>) -> Result<Jet, FlowError> {
    field.check_point(x)?;
    if t.is_some_and(|t| !t.is_finite()) {
        return Err(FlowError::NonFinite);
    }
    let jet = field.jet_unchecked(x, t.unwrap_or(0.0));
    if jet.value.iter().any(|v| !v.is_finite()) {
        return Err(FlowError::NonFinite);
    }
    Ok(jet)
}

fn eval_builtin(
    b: &Builtin,
    params: &BTreeMap<String, f64>,
    x: &[f64],
    t: f64,
    out: &mut [f64],
    jac: Option<&mut [f64]>,
) {
    let p = |k: &str| params.get(k).copied().unwrap_or(0.0);
    match b {
        Builtin::Hopf | Builtin::HopfAb => {
            let (a, bb) = match b {
                Builtin::Hopf => (1.0, 1.0),
                _ => (p("a") + p("a_slope") * t, p("b") + p("b_slope") * t),
            };
            out[0] = -a * x[1];
            out[1] = a * x[0];
            out[2] = -bb * x[3];
            out[3] = bb * x[2];
            if let Some(j) = jac {
                j.iter_mut().for_each(|v| *v = 0.0);
                j[1] = -a;
                j[4] = a;
                j[2 * 4 + 3] = -bb;
                j[3 * 4 + 2] = bb;
            }
        }
        Builtin::PlanarPlus | Builtin::PlanarMinus => {
            let s = if *b == Builtin::PlanarPlus { 1.0 } else { -1.0 };
            let (u, v) = (x[0], x[1]);
            let rho = s * (u * u + v * v) - t;
            out[0] = rho * u - v;
            out[1] = rho * v + u;
            if let Some(j) = jac {
                let (du, dv) = (2.0 * s * u, 2.0 * s * v);
                j[0] = rho + u * du;
                j[1] = -1.0 + u * dv;
                j[2] = 1.0 + v * du;
                j[3] = rho + v * dv;
            }
        }
    }
}

/// A dynamical model: either a flow or the suspension of a discrete map,
/// whose closed orbits are the periodic points of the map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Flow(FieldSpec),
    Cylinder(CylinderMap),
}

impl Model {
    /// Dimension of the space the model's coordinates live in.
    pub fn dim(&self) -> usize {
        match self {
            Model::Flow(f) => f.ambient_dim,
            Model::Cylinder(m) => m.dim(),
        }
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        match self {
            Model::Flow(f) => f.validate(),
            Model::Cylinder(m) => m.validate(),
        }
    }
}

/// A one-parameter family: the model's coefficients depend on `t` in `range`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub model: Model,
    pub range: (f64, f64),
}
