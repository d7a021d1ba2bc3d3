use ghostorbit::census::{build_field_census, CensusOpts, Region, SeedSpec, Window};
use ghostorbit::flow::{CylinderMap, FamilySpec, FieldSpec, Model};
use ghostorbit::homotopy::{audit_invariance, uniform_grid, EventKind, Side, SweepOpts, SweepReport};
use ghostorbit::linalg;

fn golden() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

fn planar_sweep(field: FieldSpec, n: usize) -> SweepReport {
    let family = FamilySpec {
        model: Model::Flow(field),
        range: (-1.0, 1.0),
    };
    let window = Window::new(Region::ball(2, 1.5), 7.0);
    audit_invariance(&family, &window, &uniform_grid(family.range, n), &SweepOpts::default()).unwrap()
}

fn pd_sweep(n: usize) -> SweepReport {
    let family = FamilySpec {
        model: Model::Cylinder(CylinderMap::period_doubling()),
        range: (-1.0, 1.0),
    };
    let window = Window::new(Region::cube(2, 20.0), 2.5).with_degree_max(Some(2));
    audit_invariance(&family, &window, &uniform_grid(family.range, n), &SweepOpts::default()).unwrap()
}

fn hopf_family(a_slope: f64, b_slope: f64) -> FamilySpec {
    let mut f = FieldSpec::hopf_ab(1.0, golden());
    f.params.insert("a_slope".into(), a_slope);
    f.params.insert("b_slope".into(), b_slope);
    FamilySpec {
        model: Model::Flow(f),
        range: (0.0, 1.0),
    }
}

fn check_single_ghost_boundary(r: &SweepReport, total: i64) {
    assert!(r.verdict.pass, "{:?}", r.verdict);
    assert!(r.totals.iter().all(|&w| w == total), "{:?}", r.totals);
    assert!(r.checkpoints.iter().all(|c| c.census_total == total && c.tracked_total == total));
    assert_eq!(r.events.len(), 1, "{:?}", r.events);
    let e = &r.events[0];
    assert_eq!(e.kind, EventKind::GhostBoundary);
    assert!(e.t_star.abs() < 1e-6);
    assert_eq!((e.weight_before, e.weight_after), (total, total));
}

#[test]
fn planar_minus_sweep_keeps_total() {
    let r = planar_sweep(FieldSpec::planar_minus(), 64);
    check_single_ghost_boundary(&r, -1);
    // the orbit lives before the event
    assert_eq!(r.events[0].branch_side, Some(Side::Before));
}

#[test]
fn planar_plus_sweep_keeps_total() {
    let r = planar_sweep(FieldSpec::planar_plus(), 64);
    check_single_ghost_boundary(&r, 0);
    assert_eq!(r.events[0].branch_side, Some(Side::After));
}

#[test]
fn planar_minus_orbit_radius() {
    let window = Window::new(Region::ball(2, 1.5), 7.0);
    let c = build_field_census(&FieldSpec::planar_minus(), Some(-0.25), &window, &SeedSpec::default(), &CensusOpts::default())
        .unwrap();
    let orbits: Vec<_> = c.embedded().collect();
    assert_eq!(orbits.len(), 1);
    for p in &orbits[0].samples {
        assert!((linalg::norm(p) - 0.5).abs() < 1e-6);
    }
}

#[test]
fn period_doubling_sweep() {
    let r = pd_sweep(64);
    assert!(r.verdict.pass, "{:?}", r.verdict);
    for (t, c) in r.grid.iter().zip(&r.censuses) {
        let w = c.slice_weights();
        assert_eq!(w.get(&1), Some(&1), "t = {t}");
        if t.abs() > 0.05 {
            assert_eq!(w.get(&2), Some(&-1), "t = {t}");
        }
        let mut slice2: Vec<i32> = c
            .orbits
            .iter()
            .filter(|o| o.total_period == 2.0)
            .map(|o| o.weight().unwrap())
            .collect();
        slice2.sort();
        if *t > 0.0 {
            assert_eq!(slice2, vec![-1, 0], "t = {t}");
        } else {
            assert_eq!(slice2, vec![-1], "t = {t}");
        }
    }
    assert_eq!(r.events.len(), 1, "{:?}", r.events);
    let e = &r.events[0];
    assert_eq!(e.kind, EventKind::PeriodDoubling);
    assert!(e.t_star.abs() < 1e-6);
    assert_eq!(e.branch_side, Some(Side::After));
}

#[test]
fn period_doubling_signs() {
    let r = pd_sweep(64);
    let e = &r.events[0];
    let embedded = e.carriers.iter().find(|c| c.period == Some(1.0)).unwrap();
    let (before, after) = (embedded.signs_before.unwrap(), embedded.signs_after.unwrap());
    assert_eq!(before.0, after.0);
    assert_eq!(before.1, -after.1);
    let emitted = e.carriers.iter().find(|c| c.period == Some(2.0)).unwrap();
    let branch = emitted.signs_after.unwrap();
    assert_eq!(branch.0, -after.1);
    // the total over the degree-2 slice is conserved across the event
    let w2 = |(e1, e2): (i8, i8)| (e2 as i32 - e1 as i32) / 2;
    assert_eq!(w2(before), w2(after) + branch.0 as i32);
}

#[test]
fn constant_family_has_no_events() {
    let family = hopf_family(0.0, 0.0);
    let window = Window::new(Region::ball(4, 1.5), 7.0);
    let r = audit_invariance(&family, &window, &uniform_grid(family.range, 16), &SweepOpts::default()).unwrap();
    assert!(r.verdict.pass);
    assert!(r.events.is_empty(), "{:?}", r.events);
    assert!(r.totals.iter().all(|&w| w == 2));
}

#[test]
fn grid_refinement_is_stable() {
    let tol = SweepOpts::default().tol_event;
    // halving the spacing of a 64-point grid puts a grid point on the event
    let pairs = [(pd_sweep(64), pd_sweep(127)), (planar_sweep(FieldSpec::planar_minus(), 64), planar_sweep(FieldSpec::planar_minus(), 127))];
    for (coarse, fine) in pairs {
        assert_eq!(coarse.events.len(), fine.events.len());
        for (a, b) in coarse.events.iter().zip(&fine.events) {
            assert_eq!(a.kind, b.kind);
            assert!((a.t_star - b.t_star).abs() < 10.0 * tol, "{} vs {}", a.t_star, b.t_star);
        }
    }
}

#[test]
fn hopf_orbits_leaving_the_window() {
    let family = hopf_family(-0.8, -1.4);
    let window = Window::new(Region::ball(4, 1.5), 7.0);
    let r = audit_invariance(&family, &window, &uniform_grid(family.range, 64), &SweepOpts::default()).unwrap();
    assert!(!r.verdict.pass);
    assert!(r.verdict.explained_by_window);
    let kinds: Vec<_> = r.events.iter().map(|e| e.kind).collect();
    assert_eq!(kinds, vec![EventKind::WindowBoundary; 2]);
    // periods cross the cutoff where 2 pi / a(t) = 7, then 2 pi / b(t) = 7
    let cross = |v0: f64, slope: f64| (2.0 * std::f64::consts::PI / 7.0 - v0) / slope;
    assert!((r.events[0].t_star - cross(1.0, -0.8)).abs() < 1e-6);
    assert!((r.events[1].t_star - cross(golden(), -1.4)).abs() < 1e-6);
    assert_eq!(*r.totals.first().unwrap(), 2);
    assert_eq!(*r.totals.last().unwrap(), 0);
}
