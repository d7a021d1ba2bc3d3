//! Rigidity classification of linearized holonomy maps and the integer
//! weights attached to periodic orbits, their multiple covers, ghost orbits
//! and closed manifold families of orbits.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, LinalgError, SquareMatrix, Spectrum};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeightError {
    #[error("holonomy has a {degree}-th root of unity as eigenvalue")]
    NotRigid { degree: u32 },
    #[error("holonomy is not super-rigid up to degree {d_max}")]
    NotSuperRigid { d_max: u32 },
    #[error("ghost is not super-rigid: {0}")]
    NotSuperRigidGhost(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Degree bound and root-of-unity tolerance used to certify rigidity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RigidityOpts {
    pub d_max: u32,
    pub tol_root: f64,
}

impl Default for RigidityOpts {
    fn default() -> Self {
        RigidityOpts {
            d_max: 12,
            tol_root: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub spectrum: Spectrum,
    /// `d_rigid[d - 1]` tells whether no `d`-th root of unity is an eigenvalue.
    pub d_rigid: Vec<bool>,
    pub d_max: u32,
    pub tol_root: f64,
    pub super_rigid: bool,
    pub eigenvalue_one_multiplicity: usize,
    pub eigenvalue_minus_one_multiplicity: usize,
}

impl RigidityReport {
    pub fn is_rigid(&self, d: u32) -> bool {
        d >= 1 && (d as usize) <= self.d_rigid.len() && self.d_rigid[d as usize - 1]
    }
}

/// A degree-`d` cover of a super-rigid embedded orbit and its weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedOrbitClass {
    pub degree: u32,
    pub epsilon1: i8,
    pub epsilon2: i8,
    pub weight: i32,
}

/// Distance from `z` to the nearest `d`-th root of unity.
pub fn distance_to_roots_of_unity(z: Complex64, d: u32) -> f64 {
    let d = d as f64;
    let arg = z.arg();
    let k = (arg * d / (2.0 * PI)).round();
    let root = Complex64::from_polar(1.0, 2.0 * PI * k / d);
    (z - root).norm()
}

pub fn classify_holonomy(f: &SquareMatrix, opts: RigidityOpts) -> Result<RigidityReport, WeightError> {
    let spectrum = linalg::eigenvalues(f)?;
    Ok(classify_spectrum(spectrum, opts))
}

pub fn classify_spectrum(spectrum: Spectrum, opts: RigidityOpts) -> RigidityReport {
    let one = Complex64::new(1.0, 0.0);
    let d_rigid: Vec<bool> = (1..=opts.d_max)
        .map(|d| {
            spectrum
                .eigenvalues()
                .iter()
                .all(|&z| distance_to_roots_of_unity(z, d) >= opts.tol_root)
        })
        .collect();
    let eigenvalue_one_multiplicity = spectrum
        .eigenvalues()
        .iter()
        .filter(|&&z| (z - one).norm() < opts.tol_root)
        .count();
    let eigenvalue_minus_one_multiplicity = spectrum
        .eigenvalues()
        .iter()
        .filter(|&&z| (z + one).norm() < opts.tol_root)
        .count();
    RigidityReport {
        super_rigid: d_rigid.iter().all(|&r| r),
        spectrum,
        d_rigid,
        d_max: opts.d_max,
        tol_root: opts.tol_root,
        eigenvalue_one_multiplicity,
        eigenvalue_minus_one_multiplicity,
    }
}

/// `sgn det(f^d - Id)` for a `d`-rigid holonomy.
pub fn epsilon(f: &SquareMatrix, d: u32, opts: RigidityOpts) -> Result<i8, WeightError> {
    let opts = RigidityOpts {
        d_max: opts.d_max.max(d),
        ..opts
    };
    let report = classify_holonomy(f, opts)?;
    if !report.is_rigid(d) {
        return Err(WeightError::NotRigid { degree: d });
    }
    match linalg::sign_det_shifted(f, d)? {
        0 => Err(WeightError::NotRigid { degree: d }),
        s => Ok(s),
    }
}

/// Weight of the degree-`d` cover of an embedded orbit with holonomy `f`:
/// `eps1` for `d = 1`, `(eps2 - eps1) / 2` for `d = 2`, zero above.
pub fn weight_periodic(
    f: &SquareMatrix,
    d: u32,
    opts: RigidityOpts,
) -> Result<WeightedOrbitClass, WeightError> {
    let opts = RigidityOpts {
        d_max: opts.d_max.max(2),
        ..opts
    };
    let report = classify_holonomy(f, opts)?;
    if !report.super_rigid {
        return Err(WeightError::NotSuperRigid { d_max: opts.d_max });
    }
    weight_from_signs(
        d,
        linalg::sign_det_shifted(f, 1)?,
        linalg::sign_det_shifted(f, 2)?,
    )
    .ok_or(WeightError::NotSuperRigid { d_max: opts.d_max })
}

/// Weight bookkeeping given already computed `eps1`, `eps2`; `None` if either is zero.
pub fn weight_from_signs(d: u32, epsilon1: i8, epsilon2: i8) -> Option<WeightedOrbitClass> {
    if epsilon1 == 0 || epsilon2 == 0 || d == 0 {
        return None;
    }
    let weight = match d {
        1 => epsilon1 as i32,
        2 => (epsilon2 as i32 - epsilon1 as i32) / 2,
        _ => 0,
    };
    Some(WeightedOrbitClass {
        degree: d,
        epsilon1,
        epsilon2,
        weight,
    })
}

/// Eigenvalues of the Jacobian at a zero closer than this are treated as repeated.
pub const GHOST_REPEAT_TOL: f64 = 1e-8;
/// Eigenvalues with real part below this in magnitude sit on the imaginary axis.
pub const GHOST_IMAG_AXIS_TOL: f64 = 1e-9;

/// Checks the Jacobian at a zero for ghost super-rigidity.
pub fn check_ghost_super_rigid(jacobian: &SquareMatrix) -> Result<Spectrum, WeightError> {
    let spectrum = linalg::eigenvalues(jacobian)?;
    let ev = spectrum.eigenvalues();
    if let Some(z) = ev.iter().find(|z| z.re.abs() < GHOST_IMAG_AXIS_TOL) {
        return Err(WeightError::NotSuperRigidGhost(format!(
            "eigenvalue {z} on the imaginary axis"
        )));
    }
    for (i, a) in ev.iter().enumerate() {
        for b in &ev[i + 1..] {
            if (a - b).norm() < GHOST_REPEAT_TOL {
                return Err(WeightError::NotSuperRigidGhost(format!(
                    "repeated eigenvalue {a}"
                )));
            }
        }
    }
    Ok(spectrum)
}

/// Weight of a ghost orbit: `-sgn det(d_xY)` in degree one, zero otherwise.
pub fn weight_ghost(jacobian: &SquareMatrix, degree: u32) -> Result<i32, WeightError> {
    check_ghost_super_rigid(jacobian)?;
    if degree != 1 {
        return Ok(0);
    }
    let det = jacobian.det();
    Ok(-(linalg::sign(det) as i32))
}

/// Weight of the degree-`d` covers of a closed manifold family of orbits with
/// Euler characteristic `euler_char`, from the real eigenvalue counts of one
/// representative holonomy.
pub fn weight_family(m1: usize, m2: usize, euler_char: i64, d: u32) -> i64 {
    let s1: i64 = if m1 % 2 == 0 { 1 } else { -1 };
    let s2: i64 = if m2 % 2 == 0 { 1 } else { -1 };
    match d {
        1 => s1 * euler_char,
        2 => (s2 - s1) / 2 * euler_char,
        _ => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> RigidityOpts {
        RigidityOpts::default()
    }

    fn pd_holonomy(t: f64) -> SquareMatrix {
        SquareMatrix::from_diag(&[-1.0 - t / 100.0, -2.0])
    }

    #[test]
    fn identity_is_not_super_rigid() {
        let r = classify_holonomy(&SquareMatrix::identity(2), opts()).unwrap();
        assert!(!r.super_rigid);
        assert_eq!(r.eigenvalue_one_multiplicity, 2);
        assert!(r.d_rigid.iter().all(|&b| !b));
    }

    #[test]
    fn period_doubling_holonomy_rigidity() {
        let r = classify_holonomy(&pd_holonomy(1.0), opts()).unwrap();
        assert!(r.super_rigid);
        let r0 = classify_holonomy(&pd_holonomy(0.0), opts()).unwrap();
        assert!(r0.is_rigid(1));
        assert!(!r0.is_rigid(2));
        assert!(!r0.super_rigid);
        assert_eq!(r0.eigenvalue_minus_one_multiplicity, 1);
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon(&pd_holonomy(1.0), 1, opts()), Ok(1));
        assert_eq!(epsilon(&pd_holonomy(1.0), 2, opts()), Ok(1));
        assert_eq!(epsilon(&pd_holonomy(-1.0), 2, opts()), Ok(-1));
        assert_eq!(epsilon(&SquareMatrix::from_diag(&[0.4]), 1, opts()), Ok(-1));
        assert_eq!(
            epsilon(&pd_holonomy(0.0), 2, opts()),
            Err(WeightError::NotRigid { degree: 2 })
        );
    }

    #[test]
    fn periodic_weights() {
        let w = |t: f64, d| weight_periodic(&pd_holonomy(t), d, opts()).unwrap().weight;
        assert_eq!(w(1.0, 1), 1);
        assert_eq!(w(1.0, 2), 0);
        assert_eq!(w(-1.0, 2), -1);
        assert_eq!(w(1.0, 5), 0);
        assert_eq!(
            weight_periodic(&SquareMatrix::identity(2), 1, opts()),
            Err(WeightError::NotSuperRigid { d_max: 12 })
        );
    }

    #[test]
    fn ghost_weights() {
        for t in [0.1, 0.5, 1.0] {
            let j = SquareMatrix::complex_multiplication(Complex64::new(-t, 1.0));
            assert_eq!(weight_ghost(&j, 1), Ok(-1));
            assert_eq!(weight_ghost(&j, 2), Ok(0));
        }
        // Divergence free 3D: a complex pair with negative real part forces the
        // third eigenvalue to be positive, so det > 0 and the weight is -1.
        let j = SquareMatrix::block_diag(&[
            SquareMatrix::complex_multiplication(Complex64::new(-0.3, 1.2)),
            SquareMatrix::from_diag(&[0.6]),
        ]);
        assert!(j.trace().abs() < 1e-15);
        assert!(j.det() > 0.0);
        assert_eq!(weight_ghost(&j, 1), Ok(-1));
        let boundary = SquareMatrix::complex_multiplication(Complex64::new(0.0, 1.0));
        assert!(matches!(
            weight_ghost(&boundary, 1),
            Err(WeightError::NotSuperRigidGhost(_))
        ));
        let repeated = SquareMatrix::from_diag(&[-1.0, -1.0]);
        assert!(matches!(
            weight_ghost(&repeated, 1),
            Err(WeightError::NotSuperRigidGhost(_))
        ));
    }

    #[test]
    fn family_weights() {
        assert_eq!(weight_family(0, 0, 2, 1), 2);
        assert_eq!(weight_family(0, 0, 2, 2), 0);
        assert_eq!(weight_family(1, 0, 2, 2), 2);
        assert_eq!(weight_family(1, 1, 2, 7), 0);
    }

    #[test]
    fn root_of_unity_distance() {
        let i = Complex64::new(0.0, 1.0);
        assert!(distance_to_roots_of_unity(i, 4) < 1e-15);
        assert!((distance_to_roots_of_unity(i, 2) - 2f64.sqrt()).abs() < 1e-15);
        assert!(distance_to_roots_of_unity(Complex64::new(-1.0, 0.0), 2) < 1e-15);
    }
}
