use std::f64::consts::PI;

use ghostorbit::census::{
    build_census, build_field_census, build_map_census, refine_orbit, Census, CensusOpts,
    GhostKind, Region, RefineOpts, SeedSpec, Window,
};
use ghostorbit::flow::{CylinderMap, FieldSpec, Model};
use ghostorbit::linalg;

fn golden() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

fn planar(field: FieldSpec, t: f64, s_max: f64) -> Census {
    let window = Window::new(Region::ball(2, 1.0), s_max);
    build_field_census(&field, Some(t), &window, &SeedSpec::default(), &CensusOpts::default()).unwrap()
}

#[test]
fn planar_minus_ghost_only() {
    let c = planar(FieldSpec::planar_minus(), 0.5, 7.0);
    assert_eq!(c.zeros.len(), 1);
    assert_eq!(c.ghosts.len(), 1);
    let g = &c.ghosts[0];
    assert_eq!(g.kind, GhostKind::Ghost);
    assert_eq!(g.degree, 1);
    assert_eq!(g.weight, Some(-1));
    assert!((g.period - 2.0 * PI).abs() < 1e-12);
    assert!((g.trace + 1.0).abs() < 1e-12);
    assert!(c.orbits.is_empty(), "{:?}", c.orbits);
    assert_eq!(c.total_weight, -1);
    assert!(!c.diagnostics.incomplete);
}

#[test]
fn ghost_period_lattice() {
    let c = planar(FieldSpec::planar_minus(), 0.5, 13.0);
    let degrees: Vec<_> = c.ghosts.iter().map(|g| (g.degree, g.weight)).collect();
    assert_eq!(degrees, vec![(1, Some(-1)), (2, Some(0))]);
    for g in &c.ghosts {
        let k = g.period * g.eigenvalue.im / (2.0 * PI);
        assert_eq!(k, g.degree as f64);
    }
}

#[test]
fn planar_minus_repelling_zero_has_no_ghost() {
    let c = planar(FieldSpec::planar_minus(), -0.5, 7.0);
    assert!(c.ghosts.is_empty());
    let radii: Vec<f64> = c.embedded().map(|o| linalg::norm(&o.base_point)).collect();
    assert_eq!(radii.len(), 1);
    assert!((radii[0] - 0.5f64.sqrt()).abs() < 1e-8);
    assert_eq!(c.total_weight, -1);
}

#[test]
fn planar_plus_totals_cancel() {
    let c = planar(FieldSpec::planar_plus(), 0.5, 7.0);
    assert_eq!(c.ghosts.len(), 1);
    assert_eq!(c.ghosts[0].weight, Some(-1));
    let orbits: Vec<_> = c.embedded().collect();
    assert_eq!(orbits.len(), 1);
    let class = orbits[0].class.unwrap();
    // unstable cycle: return multiplier exp(4 pi t) > 1
    assert_eq!((class.epsilon1, class.epsilon2, class.weight), (1, 1, 1));
    assert_eq!(c.total_weight, 0);
}

#[test]
fn empty_window_below_all_periods() {
    let c = planar(FieldSpec::planar_minus(), 0.5, 0.1);
    assert!(c.ghosts.is_empty() && c.orbits.is_empty());
    assert_eq!(c.total_weight, 0);
}

#[test]
fn hopf_field_has_no_zeros() {
    let window = Window::new(Region::ball(4, 1.5), 1.0);
    let c = build_field_census(&FieldSpec::hopf(), None, &window, &SeedSpec::default(), &CensusOpts::default())
        .unwrap();
    assert!(c.zeros.is_empty());
}

#[test]
fn hopf_ab_two_circles() {
    let b = golden();
    let window = Window::new(Region::ball(4, 1.5), 7.0);
    let c = build_field_census(&FieldSpec::hopf_ab(1.0, b), None, &window, &SeedSpec::default(), &CensusOpts::default())
        .unwrap();
    let mut periods: Vec<f64> = c.embedded().map(|o| o.minimal_period).collect();
    periods.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(periods.len(), 2, "{:?}", c.diagnostics);
    assert!((periods[0] - 2.0 * PI / b).abs() < 1e-6);
    assert!((periods[1] - 2.0 * PI).abs() < 1e-6);
    for o in c.embedded() {
        let class = o.class.unwrap();
        assert_eq!((class.epsilon1, class.epsilon2), (1, 1));
    }
    assert_eq!(c.weight_by_degree.get(&1), Some(&2));
    assert_eq!(c.total_weight, 2);
}

#[test]
fn base_point_independence_and_degree_bookkeeping() {
    let b = golden();
    let f = FieldSpec::hopf_ab(1.0, b);
    let opts = RefineOpts::default();
    let o1 = refine_orbit(&f, &[0.0, 0.0, 1.0, 0.0], 3.9, None, &opts).unwrap();
    let o2 = refine_orbit(&f, &[0.0, 0.0, 0.6, 0.8], 3.9, None, &opts).unwrap();
    let p1 = linalg::eigenvalues(&o1.holonomy).unwrap();
    let p2 = linalg::eigenvalues(&o2.holonomy).unwrap();
    for (a, c) in p1.char_poly().iter().zip(p2.char_poly()) {
        assert!((a - c).abs() < 1e-5);
    }
    let f2 = FieldSpec::planar_minus();
    let o = refine_orbit(&f2, &[0.3, 0.0], 6.0, Some(-0.1), &opts).unwrap();
    let window = Window::new(Region::ball(2, 1.0), 20.0);
    let records = ghostorbit::census::orbit_records(0, &o, &window, Default::default());
    assert_eq!(records.len(), 3);
    let base = linalg::eigenvalues(&o.holonomy).unwrap();
    for r in &records {
        let got = linalg::eigenvalues(&r.holonomy).unwrap();
        for (g, e) in got.eigenvalues().iter().zip(base.powers(r.degree)) {
            assert!((g - e).norm() < 1e-5);
        }
    }
    let weights: Vec<i32> = records.iter().map(|r| r.weight().unwrap()).collect();
    assert_eq!(weights, vec![-1, 0, 0]);
}

#[test]
fn window_monotonicity() {
    let small = planar(FieldSpec::planar_minus(), -0.3, 7.0);
    let large = planar(FieldSpec::planar_minus(), -0.3, 20.0);
    assert!(large.orbits.len() >= small.orbits.len());
    for o in &small.orbits {
        assert!(large
            .orbits
            .iter()
            .any(|p| p.degree == o.degree && (p.total_period - o.total_period).abs() < 1e-6));
    }
    let added: i64 = large
        .orbits
        .iter()
        .filter(|p| p.total_period > 7.0)
        .map(|p| p.weight().unwrap_or(0) as i64)
        .sum::<i64>()
        + large
            .ghosts
            .iter()
            .filter(|g| g.period > 7.0)
            .map(|g| g.weight.unwrap_or(0) as i64)
            .sum::<i64>();
    assert_eq!(large.total_weight, small.total_weight + added);
}

#[test]
fn tangency_along_orbits() {
    let o = refine_orbit(&FieldSpec::planar_plus(), &[0.6, 0.1], 6.3, Some(0.4), &RefineOpts::default())
        .unwrap();
    let jet = ghostorbit::flow::evaluate(&FieldSpec::planar_plus(), &o.base_point, Some(0.4)).unwrap();
    let my = o.monodromy.mul_vec(&jet.value);
    let err = linalg::norm(&my.iter().zip(&jet.value).map(|(a, b)| a - b).collect::<Vec<_>>());
    assert!(err < 1e-6 * linalg::norm(&jet.value));
}

#[test]
fn period_doubling_map_slices() {
    let window = Window::new(Region::cube(2, 20.0), 2.5);
    let pos = build_map_census(&CylinderMap::period_doubling(), Some(1.0), &window, &SeedSpec::default(), &CensusOpts::default())
        .unwrap();
    assert_eq!(pos.embedded().count(), 2);
    assert_eq!(pos.weight_by_period.get(&1), Some(&1));
    assert_eq!(pos.weight_by_period.get(&2), Some(&-1));
    let period_two: Vec<_> = pos.orbits.iter().filter(|o| o.total_period == 2.0).collect();
    assert_eq!(period_two.len(), 2);
    let neg = build_census(&Model::Cylinder(CylinderMap::period_doubling()), Some(-1.0), &window, &SeedSpec::default(), &CensusOpts::default())
        .unwrap();
    assert_eq!(neg.embedded().count(), 1);
    assert_eq!(neg.weight_by_period.get(&1), Some(&1));
    assert_eq!(neg.weight_by_period.get(&2), Some(&-1));
}
