use std::collections::BTreeMap;

use ghostorbit::census::{build_map_census, CensusOpts, Region, SeedSpec, Window};
use ghostorbit::flow::CylinderMap;
use ghostorbit::lefschetz::{
    brute_force_orbit_count, lefschetz_number, moebius_weights, pi_series, DiscreteMapSpec, HomologyData,
};
use num_bigint::BigInt;
use proptest::prelude::*;

fn cat() -> Vec<Vec<i64>> {
    vec![vec![2, 1], vec![1, 1]]
}

fn to_i64(m: &BTreeMap<u32, BigInt>) -> Vec<i64> {
    m.values().map(|v| i64::try_from(v).unwrap()).collect()
}

#[test]
fn cat_map_oracle_up_to_six() {
    let h = HomologyData::torus(&cat());
    let weights = moebius_weights(&h, 6).unwrap();
    let brute = brute_force_orbit_count(&DiscreteMapSpec::ToralAutomorphism { matrix: cat() }, 6).unwrap();
    assert_eq!(weights, brute.weights);
    for n in 1..=6u32 {
        let lhs: BigInt = (1..=n).filter(|d| n % d == 0).map(|d| BigInt::from(d) * &weights[&d]).sum();
        assert_eq!(lhs, lefschetz_number(&h, n).unwrap());
        // |Fix(A^n)| = |det(A^n - I)| = |L(f^n)| for the cat map
        assert_eq!(BigInt::from(brute.fixed_points(n)), -lefschetz_number(&h, n).unwrap());
    }
    assert_eq!(to_i64(&weights)[..3], [-1, -2, -5]);
    let series = pi_series(&h, 6).unwrap();
    assert_eq!(series, weights.values().cloned().collect::<Vec<_>>());
}

#[test]
fn planar_map_agrees_with_numerical_census() {
    let window = Window::new(Region::cube(2, 20.0), 2.5).with_degree_max(Some(2));
    for t in [-1.0, -0.5, 0.5, 1.0] {
        let exact = brute_force_orbit_count(&DiscreteMapSpec::PlanarPolynomial { t, half_width: 20.0 }, 2).unwrap();
        let census = build_map_census(&CylinderMap::period_doubling(), Some(t), &window, &SeedSpec::default(), &CensusOpts::default())
            .unwrap();
        let numeric: Vec<i64> = (1..=2).map(|d| census.weight_by_period.get(&d).copied().unwrap_or(0)).collect();
        assert_eq!(to_i64(&exact.weights), numeric, "t = {t}");
        assert_eq!(exact.points.values().sum::<u64>() as usize, census.embedded().map(|o| o.samples.len()).sum::<usize>());
    }
}

/// Unimodular integer matrices as products of elementary shears.
fn unimodular(dim: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec((0..dim, 0..dim, -2i64..=2, any::<bool>()), 2..8).prop_map(move |ops| {
        let mut a: Vec<Vec<i64>> = (0..dim).map(|i| (0..dim).map(|j| (i == j) as i64).collect()).collect();
        for (i, j, c, flip) in ops {
            if i != j {
                for k in 0..dim {
                    a[i][k] += c * a[j][k];
                }
            }
            if flip {
                a.swap(0, dim - 1);
            }
        }
        a
    })
}

/// Hyperbolic without roots of unity up to order 12, with a modest number of points.
fn usable(a: &[Vec<i64>], n: u32) -> bool {
    let counts: Vec<i64> = (1..=12).map(|d| fix_count(a, d)).collect();
    counts.iter().all(|&c| c > 0) && counts[..n as usize].iter().sum::<i64>() <= 20_000
}

/// `|det(A^d - I)|`, zero iff `A` has an eigenvalue that is a `d`-th root of unity.
fn fix_count(a: &[Vec<i64>], d: u32) -> i64 {
    let dim = a.len();
    let mut p: Vec<Vec<i128>> = (0..dim).map(|i| (0..dim).map(|j| (i == j) as i128).collect()).collect();
    for _ in 0..d {
        p = (0..dim)
            .map(|i| (0..dim).map(|j| (0..dim).map(|k| p[i][k] * a[k][j] as i128).sum()).collect())
            .collect();
    }
    for (i, row) in p.iter_mut().enumerate() {
        row[i] -= 1;
    }
    det_i128(p).unsigned_abs().min(i64::MAX as u128) as i64
}

fn det_i128(m: Vec<Vec<i128>>) -> i128 {
    let n = m.len();
    if n == 1 {
        return m[0][0];
    }
    (0..n)
        .map(|c| {
            let minor: Vec<Vec<i128>> = m[1..].iter().map(|r| r.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, v)| *v).collect()).collect();
            let s = if c % 2 == 0 { 1 } else { -1 };
            s * m[0][c] * det_i128(minor)
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn toral_oracle_equivalence(a in prop_oneof![unimodular(2), unimodular(3)]) {
        let n = 6;
        prop_assume!(usable(&a, n));
        let h = HomologyData::torus(&a);
        let weights = moebius_weights(&h, n).unwrap();
        let brute = brute_force_orbit_count(&DiscreteMapSpec::ToralAutomorphism { matrix: a.clone() }, n).unwrap();
        prop_assert_eq!(&weights, &brute.weights);
        prop_assert_eq!(pi_series(&h, n).unwrap(), weights.values().cloned().collect::<Vec<_>>());
        for m in 1..=n {
            prop_assert_eq!(brute.fixed_points(m) as i64, fix_count(&a, m));
        }
    }
}
