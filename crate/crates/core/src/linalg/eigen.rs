use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{LinalgError, SquareMatrix, REAL_TOL};

/// Eigenvalues (with algebraic multiplicity) together with the coefficients
/// `a1..an` of the monic characteristic polynomial `x^n + a1 x^(n-1) + ... + an`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    eigenvalues: Vec<Complex64>,
    char_poly: Vec<f64>,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn char_poly(&self) -> &[f64] {
        &self.char_poly
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn sum(&self) -> Complex64 {
        self.eigenvalues.iter().sum()
    }

    pub fn product(&self) -> Complex64 {
        self.eigenvalues.iter().product()
    }

    /// Real eigenvalues (those with `|Im| < 1e-9`), ascending.
    pub fn real_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .filter(|z| z.im.abs() < REAL_TOL)
            .map(|z| z.re)
            .collect()
    }

    /// Eigenvalues in the open upper half plane, one per conjugate pair.
    pub fn upper_half_plane(&self) -> Vec<Complex64> {
        self.eigenvalues
            .iter()
            .filter(|z| z.im >= REAL_TOL)
            .copied()
            .collect()
    }

    /// Coefficients of `prod (x - lambda_i)` expanded from the eigenvalues.
    pub fn poly_from_roots(&self) -> Vec<f64> {
        let mut c = vec![Complex64::new(1.0, 0.0)];
        for &lam in &self.eigenvalues {
            let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k] += ck;
                next[k + 1] -= lam * ck;
            }
            c = next;
        }
        c.iter().skip(1).map(|z| z.re).collect()
    }

    /// Spectrum of the `d`-th power, from the eigenvalues alone.
    pub fn powers(&self, d: u32) -> Vec<Complex64> {
        self.eigenvalues.iter().map(|z| z.powu(d)).collect()
    }
}

/// All eigenvalues of `m` plus its characteristic polynomial.
pub fn eigenvalues(m: &SquareMatrix) -> Result<Spectrum, LinalgError> {
    m.check_finite()?;
    let n = m.dim();
    let mut a = m.rows();
    balance(&mut a);
    hessenberg(&mut a);
    let char_poly = hessenberg_char_poly(&a);
    let mut eig = hqr(a)?;
    for z in eig.iter_mut() {
        if z.im.abs() < f64::EPSILON * (1.0 + z.re.abs()) {
            z.im = 0.0;
        }
    }
    eig.sort_by(|x, y| {
        x.re
            .partial_cmp(&y.re)
            .unwrap()
            .then(x.im.partial_cmp(&y.im).unwrap())
    });
    debug_assert_eq!(eig.len(), n);
    Ok(Spectrum {
        eigenvalues: eig,
        char_poly,
    })
}

/// Characteristic polynomial coefficients `a1..an` of `m`.
pub fn char_poly(m: &SquareMatrix) -> Result<Vec<f64>, LinalgError> {
    m.check_finite()?;
    let mut a = m.rows();
    balance(&mut a);
    hessenberg(&mut a);
    Ok(hessenberg_char_poly(&a))
}

fn balance(a: &mut [Vec<f64>]) {
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let n = a.len();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 0..n {
                        a[i][j] *= g;
                    }
                    for row in a.iter_mut() {
                        row[i] *= f;
                    }
                }
            }
        }
    }
}

/// Reduction to upper Hessenberg form by stabilised elementary similarity
/// transforms. Entries below the subdiagonal are zeroed on return.
fn hessenberg(a: &mut [Vec<f64>]) {
    let n = a.len();
    for m in 1..n.saturating_sub(1) {
        let mut x: f64 = 0.0;
        let mut piv = m;
        for j in m..n {
            if a[j][m - 1].abs() > x.abs() {
                x = a[j][m - 1];
                piv = j;
            }
        }
        if piv != m {
            for j in (m - 1)..n {
                let t = a[piv][j];
                a[piv][j] = a[m][j];
                a[m][j] = t;
            }
            for row in a.iter_mut() {
                row.swap(piv, m);
            }
        }
        if x != 0.0 {
            for i in (m + 1)..n {
                let mut y = a[i][m - 1];
                if y != 0.0 {
                    y /= x;
                    a[i][m - 1] = y;
                    for j in m..n {
                        a[i][j] -= y * a[m][j];
                    }
                    for row in a.iter_mut() {
                        row[m] += y * row[i];
                    }
                }
            }
        }
    }
    for (i, row) in a.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            if i > j + 1 {
                *v = 0.0;
            }
        }
    }
}

/// Hyman's recurrence on the leading principal submatrices of an upper
/// Hessenberg matrix.
fn hessenberg_char_poly(h: &[Vec<f64>]) -> Vec<f64> {
    let n = h.len();
    // p[k] holds coefficients (lowest degree first) of det(x I - H_k).
    let mut p: Vec<Vec<f64>> = vec![vec![1.0]];
    for k in 1..=n {
        let prev = &p[k - 1];
        let mut next = vec![0.0; k + 1];
        for (d, &c) in prev.iter().enumerate() {
            next[d + 1] += c;
            next[d] -= h[k - 1][k - 1] * c;
        }
        let mut prod = 1.0;
        for i in (1..k).rev() {
            prod *= h[i][i - 1];
            let coef = h[i - 1][k - 1] * prod;
            if coef != 0.0 {
                for (d, &c) in p[i - 1].iter().enumerate() {
                    next[d] -= coef * c;
                }
            }
        }
        p.push(next);
    }
    let full = &p[n];
    (0..n).map(|k| full[n - 1 - k]).collect()
}

fn sign_of(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix.
fn hqr(mut a: Vec<Vec<f64>>) -> Result<Vec<Complex64>, LinalgError> {
    let n = a.len();
    let mut wri = vec![Complex64::new(0.0, 0.0); n];
    let eps = f64::EPSILON;
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            let mut l = nu;
            while l > 0 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() <= eps * s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[nu][nu];
            if l == nu {
                wri[nu] = Complex64::new(x + t, 0.0);
                nn -= 1;
            } else {
                let mut y = a[nu - 1][nu - 1];
                let mut w = a[nu][nu - 1] * a[nu - 1][nu];
                if l == nu - 1 {
                    let p = 0.5 * (y - x);
                    let q = p * p + w;
                    let mut z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + sign_of(z, p);
                        wri[nu - 1] = Complex64::new(x + z, 0.0);
                        wri[nu] = Complex64::new(x + z, 0.0);
                        if z != 0.0 {
                            wri[nu] = Complex64::new(x - w / z, 0.0);
                        }
                    } else {
                        wri[nu] = Complex64::new(x + p, -z);
                        wri[nu - 1] = Complex64::new(x + p, z);
                    }
                    nn -= 2;
                } else {
                    if its == 60 {
                        return Err(LinalgError::NoConvergence);
                    }
                    if its == 10 || its == 20 || its == 40 {
                        t += x;
                        for i in 0..=nu {
                            a[i][i] -= x;
                        }
                        let s = a[nu][nu - 1].abs() + a[nu - 1][nu - 2].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let mut m = nu - 2;
                    let (mut p, mut q, mut r);
                    loop {
                        let z = a[m][m];
                        let rr = x - z;
                        let ss = y - z;
                        p = (rr * ss - w) / a[m + 1][m] + a[m][m + 1];
                        q = a[m + 1][m + 1] - z - rr - ss;
                        r = a[m + 2][m + 1];
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                        if u <= eps * v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m..(nu - 1) {
                        a[i + 2][i] = 0.0;
                        if i != m {
                            a[i + 2][i - 1] = 0.0;
                        }
                    }
                    let mut k = m;
                    while k < nu {
                        if k != m {
                            p = a[k][k - 1];
                            q = a[k + 1][k - 1];
                            r = 0.0;
                            if k + 1 != nu {
                                r = a[k + 2][k - 1];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = sign_of((p * p + q * q + r * r).sqrt(), p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    a[k][k - 1] = -a[k][k - 1];
                                }
                            } else {
                                a[k][k - 1] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            let z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nu {
                                let mut pp = a[k][j] + q * a[k + 1][j];
                                if k + 1 != nu {
                                    pp += r * a[k + 2][j];
                                    a[k + 2][j] -= pp * z;
                                }
                                a[k + 1][j] -= pp * y;
                                a[k][j] -= pp * x;
                            }
                            let mmin = if nu < k + 3 { nu } else { k + 3 };
                            for i in l..=mmin {
                                let mut pp = x * a[i][k] + y * a[i][k + 1];
                                if k + 1 != nu {
                                    pp += z * a[i][k + 2];
                                    a[i][k + 2] -= pp * r;
                                }
                                a[i][k + 1] -= pp * q;
                                a[i][k] -= pp;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if nn < 0 || l + 1 >= nn as usize {
                break;
            }
        }
    }
    Ok(wri)
}
