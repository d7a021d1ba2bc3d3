use ghostorbit::holonomy::{epsilon, weight_periodic, RigidityOpts};
use ghostorbit::linalg::{
    eigenvalues, real_eigenvalue_counts, sign_det_shifted, SquareMatrix,
};
use proptest::prelude::*;

fn matrix(max_dim: usize, range: f64) -> impl Strategy<Value = SquareMatrix> {
    (1..=max_dim).prop_flat_map(move |n| {
        prop::collection::vec(-range..range, n * n)
            .prop_map(move |e| SquareMatrix::new(n, e).unwrap())
    })
}

fn parity_sign(count: usize) -> i8 {
    if count % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `|det(m^d - I)|` relative to the scale of `m^d`.
fn shifted_det_is_generic(m: &SquareMatrix, d: u32) -> bool {
    let p = m.pow(d);
    let scale = (1.0 + p.max_abs()).powi(m.dim() as i32);
    p.shift(-1.0).det().abs() > 1e-6 * scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn sign_of_shifted_det_matches_real_eigenvalue_parity(m in matrix(7, 3.0)) {
        let spec = eigenvalues(&m).unwrap();
        let counts = real_eigenvalue_counts(&spec);
        prop_assume!(counts.is_ok());
        let (m1, m2) = counts.unwrap();
        for d in 1..=4u32 {
            if !shifted_det_is_generic(&m, d) {
                continue;
            }
            let expected = if d % 2 == 1 { parity_sign(m1) } else { parity_sign(m2) };
            prop_assert_eq!(sign_det_shifted(&m, d).unwrap(), expected, "d = {}", d);
        }
    }

    #[test]
    fn epsilon_depends_only_on_parity(m in matrix(6, 3.0)) {
        let opts = RigidityOpts::default();
        let e: Vec<_> = (1..=4).map(|d| epsilon(&m, d, opts)).collect();
        prop_assume!(e.iter().all(|x| x.is_ok()));
        prop_assume!((1..=4).all(|d| shifted_det_is_generic(&m, d)));
        prop_assert_eq!(&e[0], &e[2]);
        prop_assert_eq!(&e[1], &e[3]);
    }

    #[test]
    fn epsilon_is_conjugation_invariant(
        m in matrix(5, 3.0),
        g_seed in prop::collection::vec(-0.4f64..0.4, 25),
    ) {
        let n = m.dim();
        let g = SquareMatrix::new(n, g_seed[..n * n].to_vec()).unwrap().add(&SquareMatrix::identity(n));
        let g_inv = g.inverse();
        prop_assume!(g_inv.is_ok());
        let g_inv = g_inv.unwrap();
        prop_assume!(g.frobenius_norm() * g_inv.frobenius_norm() < 1e3);
        let conj = g.matmul(&m).matmul(&g_inv);
        let opts = RigidityOpts::default();
        for d in 1..=2 {
            prop_assume!(shifted_det_is_generic(&m, d));
            if let (Ok(a), Ok(b)) = (epsilon(&m, d, opts), epsilon(&conj, d, opts)) {
                prop_assert_eq!(a, b);
            }
        }
        if let (Ok(a), Ok(b)) = (weight_periodic(&m, 2, opts), weight_periodic(&conj, 2, opts)) {
            prop_assert_eq!(a.weight, b.weight);
        }
    }

    #[test]
    fn higher_covers_weigh_nothing(m in matrix(6, 3.0), d in 3u32..40) {
        if let Ok(class) = weight_periodic(&m, d, RigidityOpts::default()) {
            prop_assert_eq!(class.weight, 0);
            prop_assert_eq!(class.degree, d);
        }
    }
}

#[test]
fn geodesic_type_holonomy_signs() {
    for n in 2..=4u32 {
        let k = (n - 1) as usize;
        let mut diag = Vec::new();
        for j in 0..k {
            diag.push(0.3 + 0.1 * j as f64);
            diag.push(2.5 + 0.7 * j as f64);
        }
        let f = SquareMatrix::from_diag(&diag);
        let expected = if (n - 1) % 2 == 0 { 1 } else { -1 };
        let opts = RigidityOpts::default();
        assert_eq!(epsilon(&f, 1, opts), Ok(expected), "n = {n}");
        assert_eq!(epsilon(&f, 2, opts), Ok(expected), "n = {n}");
    }
}
