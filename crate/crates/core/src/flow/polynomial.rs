use serde::{Deserialize, Serialize};

/// One monomial `c(t) * x_0^p_0 * ... * x_{n-1}^p_{n-1}` where the coefficient
/// is itself a polynomial in the family parameter, lowest degree first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: Vec<f64>,
    pub powers: Vec<u32>,
}

impl Term {
    pub fn new(coeff: Vec<f64>, powers: Vec<u32>) -> Self {
        Term { coeff, powers }
    }

    /// Constant-in-`t` coefficient.
    pub fn constant(c: f64, powers: Vec<u32>) -> Self {
        Term {
            coeff: vec![c],
            powers,
        }
    }

    pub fn coefficient(&self, t: f64) -> f64 {
        self.coeff.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn degree(&self) -> u32 {
        self.powers.iter().sum()
    }
}

/// Polynomial map R^n -> R^n given as one list of terms per output coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialField {
    pub dim: usize,
    pub components: Vec<Vec<Term>>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum PolyIssue {
    WrongComponentCount,
    WrongArity { component: usize },
    NonFinite { component: usize },
}

impl PolynomialField {
    pub fn zero(dim: usize) -> Self {
        PolynomialField {
            dim,
            components: vec![Vec::new(); dim],
        }
    }

    /// Linear field `x -> A x` with constant coefficients.
    pub fn linear(rows: &[Vec<f64>]) -> Self {
        let dim = rows.len();
        let components = rows
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &c)| c != 0.0)
                    .map(|(j, &c)| {
                        let mut p = vec![0; dim];
                        p[j] = 1;
                        Term::constant(c, p)
                    })
                    .collect()
            })
            .collect();
        PolynomialField { dim, components }
    }

    pub fn push(&mut self, component: usize, term: Term) {
        self.components[component].push(term);
    }

    pub fn degree(&self) -> u32 {
        self.components
            .iter()
            .flatten()
            .map(Term::degree)
            .max()
            .unwrap_or(0)
    }

    pub(crate) fn validate(&self) -> Result<(), PolyIssue> {
        if self.components.len() != self.dim {
            return Err(PolyIssue::WrongComponentCount);
        }
        for (i, terms) in self.components.iter().enumerate() {
            for term in terms {
                if term.powers.len() != self.dim {
                    return Err(PolyIssue::WrongArity { component: i });
                }
                if term.coeff.iter().any(|c| !c.is_finite()) {
                    return Err(PolyIssue::NonFinite { component: i });
                }
            }
        }
        Ok(())
    }

    /// Writes the value into `out` and, if requested, the row-major Jacobian.
    pub fn eval_into(&self, x: &[f64], t: f64, out: &mut [f64], jac: Option<&mut [f64]>) {
        let n = self.dim;
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut jac = jac;
        if let Some(j) = jac.as_deref_mut() {
            j.iter_mut().for_each(|v| *v = 0.0);
        }
        for (i, terms) in self.components.iter().enumerate() {
            for term in terms {
                let c = term.coefficient(t);
                if c == 0.0 {
                    continue;
                }
                let mut mono = c;
                for (k, &p) in term.powers.iter().enumerate() {
                    if p > 0 {
                        mono *= x[k].powi(p as i32);
                    }
                }
                out[i] += mono;
                if let Some(j) = jac.as_deref_mut() {
                    for (k, &p) in term.powers.iter().enumerate() {
                        if p == 0 {
                            continue;
                        }
                        let mut d = c * p as f64 * x[k].powi(p as i32 - 1);
                        for (l, &q) in term.powers.iter().enumerate() {
                            if l != k && q > 0 {
                                d *= x[l].powi(q as i32);
                            }
                        }
                        j[i * n + k] += d;
                    }
                }
            }
        }
    }
}
