use ghostorbit::flow::{
    flow_with_monodromy, FieldSpec, IntegratorOpts, PolynomialField, Term,
};
use ghostorbit::linalg::SquareMatrix;
use proptest::prelude::*;

/// All monomials of degree at most 3 in `dim` variables.
fn monomials(dim: usize) -> Vec<Vec<u32>> {
    let mut out = vec![vec![0; dim]];
    for _ in 0..3 {
        let mut next = out.clone();
        for m in &out {
            for k in 0..dim {
                let mut p = m.clone();
                p[k] += 1;
                if !next.contains(&p) {
                    next.push(p);
                }
            }
        }
        out = next;
    }
    out
}

fn cubic_field(dim: usize) -> impl Strategy<Value = PolynomialField> {
    let monos = monomials(dim);
    prop::collection::vec(-0.5f64..0.5, dim * monos.len()).prop_map(move |c| {
        let mut p = PolynomialField::zero(dim);
        for i in 0..dim {
            for (j, m) in monos.iter().enumerate() {
                p.push(i, Term::constant(c[i * monos.len() + j], m.clone()));
            }
        }
        p
    })
}

fn scaled(p: &PolynomialField, c: f64) -> PolynomialField {
    let mut q = p.clone();
    for terms in &mut q.components {
        for t in terms {
            t.coeff.iter_mut().for_each(|v| *v *= c);
        }
    }
    q
}

fn opnorm_bound(m: &SquareMatrix) -> f64 {
    m.frobenius_norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn flow_composes(
        (p, x0) in (2usize..=3).prop_flat_map(|n| (cubic_field(n), prop::collection::vec(-0.5f64..0.5, n))),
        s1 in 0.1f64..0.8,
        s2 in 0.1f64..0.8,
    ) {
        let f = FieldSpec::polynomial(p);
        let opts = IntegratorOpts::default();
        let whole = flow_with_monodromy(&f, &x0, s1 + s2, None, &opts);
        prop_assume!(whole.is_ok());
        let (x12, m12) = whole.unwrap();
        let (x1, m1) = flow_with_monodromy(&f, &x0, s1, None, &opts).unwrap();
        let (x2, m2) = flow_with_monodromy(&f, &x1, s2, None, &opts).unwrap();
        let scale = 1.0 + x12.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (a, b) in x12.iter().zip(&x2) {
            prop_assert!((a - b).abs() < 1e-8 * scale, "{} vs {}", a, b);
        }
        let diff = opnorm_bound(&m2.matmul(&m1).sub(&m12));
        prop_assert!(diff < 1e-6 * (1.0 + opnorm_bound(&m12)), "monodromy mismatch {}", diff);
    }

    #[test]
    fn time_rescaling_is_covariant(
        (p, x0) in (2usize..=3).prop_flat_map(|n| (cubic_field(n), prop::collection::vec(-0.5f64..0.5, n))),
        s in 0.2f64..1.2,
        c in 0.3f64..3.0,
    ) {
        let opts = IntegratorOpts::default();
        let base = flow_with_monodromy(&FieldSpec::polynomial(p.clone()), &x0, s, None, &opts);
        prop_assume!(base.is_ok());
        let (x, m) = base.unwrap();
        let (xc, mc) =
            flow_with_monodromy(&FieldSpec::polynomial(scaled(&p, c)), &x0, s / c, None, &opts).unwrap();
        for (a, b) in x.iter().zip(&xc) {
            prop_assert!((a - b).abs() < 1e-7 * (1.0 + a.abs()));
        }
        prop_assert!(opnorm_bound(&m.sub(&mc)) < 1e-6 * (1.0 + opnorm_bound(&m)));
    }
}

#[test]
fn hopf_ab_monodromy_on_the_first_circle() {
    let a = 1.0;
    let b = (1.0 + 5f64.sqrt()) / 2.0;
    let f = FieldSpec::hopf_ab(a, b);
    let s = 2.0 * std::f64::consts::PI / a;
    let (x, m) = flow_with_monodromy(&f, &[1.0, 0.0, 0.0, 0.0], s, None, &IntegratorOpts::default()).unwrap();
    assert!((x[0] - 1.0).abs() < 1e-9 && x[1].abs() < 1e-9);
    // the (y1, y2) block rotates by b s
    let block = SquareMatrix::from_rows(&[vec![m[(2, 2)], m[(2, 3)]], vec![m[(3, 2)], m[(3, 3)]]]).unwrap();
    assert!(block.sub(&SquareMatrix::rotation(b * s)).max_abs() < 1e-8);
    let y = [0.0, 1.0, 0.0, 0.0];
    let my = m.mul_vec(&y);
    for (p, q) in my.iter().zip(&y) {
        assert!((p - q).abs() < 1e-8);
    }
}
