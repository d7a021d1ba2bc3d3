//! Acceptance checklist. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use ghostorbit::census::{Region, Window};
use ghostorbit::flow::{FamilySpec, FieldSpec, Model, PolynomialField, Term};
use ghostorbit::holonomy::{epsilon, weight_family, RigidityOpts};
use ghostorbit::homotopy::{audit_invariance, uniform_grid, EventKind, SweepOpts, SweepReport};
use ghostorbit::lefschetz::{brute_force_orbit_count, lefschetz_number, DiscreteMapSpec};
use ghostorbit::linalg::{self, eigenvalues, real_eigenvalue_counts, sign_det_shifted, SquareMatrix};
use ghostorbit_cli::{load, run_census, run_lefschetz, run_sweep, Overrides, RunConfig, Scenario};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Periods of the Hopf orbits against `2 pi / a`, `2 pi / b`.
const TOL_PERIOD: f64 = 1e-6;
/// Event locations against their exact parameter values.
const TOL_EVENT_LOCATION: f64 = 1e-6;
/// Radius of the planar orbit against `sqrt(|t|)`.
const TOL_RADIUS: f64 = 1e-6;
/// Grid points this close to the period-doubling parameter are exempt from
/// the degree-2 weight check.
const PD_EXEMPT_HALF_WIDTH: f64 = 0.05;
/// Random matrices of the parity suite are resampled when
/// `|det(m^d - I)| <= TOL_DEGENERATE * (1 + max|m^d|)^n` for some `d <= 4`.
const TOL_DEGENERATE: f64 = 1e-6;
const PARITY_SAMPLES: usize = 1000;
const ORACLE_D_MAX: u32 = 6;
const ORACLE_TIME_LIMIT: Duration = Duration::from_secs(10);
const RANDOM_FAMILIES: usize = 50;
/// Smallest admissible distance of any record to the region boundary.
const FAMILY_SPATIAL_MARGIN: f64 = 0.25;
/// Smallest admissible gap between a record's period and the cutoff.
const FAMILY_PERIOD_MARGIN: f64 = 0.5;
/// Resampling budget of the window auto-check.
const FAMILY_MAX_DRAWS: usize = 200;

struct Check {
    pass: bool,
    detail: String,
}

impl Check {
    fn new(pass: bool, detail: impl Into<String>) -> Check {
        Check {
            pass,
            detail: detail.into(),
        }
    }
}

fn scenario(name: &str) -> Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"));
    load(&path, Overrides::default()).unwrap_or_else(|e| panic!("{e}"))
}

fn quiet() -> RunConfig {
    RunConfig {
        no_meta: true,
        ..RunConfig::default()
    }
}

fn hopf_census() -> Check {
    let s = scenario("hopf_ab");
    let Some(ghostorbit::flow::Model::Flow(field)) = s.model.as_ref().map(|m| m.model.clone()) else {
        return Check::new(false, "scenario is not a flow");
    };
    let (a, b) = (field.param("a").unwrap(), field.param("b").unwrap());
    let c = match run_census(&s, &quiet()) {
        Ok(o) => o.result,
        Err(e) => return Check::new(false, e.to_string()),
    };
    let embedded: Vec<_> = c.embedded().collect();
    let signs_ok = embedded
        .iter()
        .all(|o| o.class.is_some_and(|k| k.epsilon1 == 1 && k.epsilon2 == 1));
    let mut periods: Vec<f64> = embedded.iter().map(|o| o.minimal_period).collect();
    periods.sort_by(f64::total_cmp);
    let mut expected = [2.0 * PI / a, 2.0 * PI / b];
    expected.sort_by(f64::total_cmp);
    let periods_ok = periods.len() == 2 && periods.iter().zip(&expected).all(|(p, e)| (p - e).abs() < TOL_PERIOD);
    let w = |d: u32| c.weight_by_degree.get(&d).copied().unwrap_or(0);
    let pass = embedded.len() == 2 && signs_ok && periods_ok && w(1) == 2 && w(2) == 0 && w(3) == 0;
    Check::new(
        pass,
        format!(
            "{} embedded orbits, periods {periods:?}, weights d1..3 = ({}, {}, {})",
            embedded.len(),
            w(1),
            w(2),
            w(3)
        ),
    )
}

fn single_ghost_boundary(r: &SweepReport, total: i64) -> (bool, String) {
    let boundaries: Vec<_> = r.events.iter().filter(|e| e.kind == EventKind::GhostBoundary).collect();
    let totals_ok = r.totals.iter().all(|&w| w == total)
        && r.checkpoints.iter().all(|c| c.census_total == total && c.tracked_total == total);
    let located = boundaries.len() == 1 && boundaries[0].t_star.abs() < TOL_EVENT_LOCATION;
    let t_star = boundaries.first().map(|e| e.t_star);
    (
        r.verdict.pass && totals_ok && located,
        format!("total {total} held: {totals_ok}, ghost boundary at {t_star:?}"),
    )
}

fn planar_sweeps() -> Check {
    let mut pass = true;
    let mut details = Vec::new();
    for (name, total) in [("planar_minus_sweep", -1), ("planar_plus_sweep", 0)] {
        match run_sweep(&scenario(name), &quiet()) {
            Ok(o) => {
                let (ok, d) = single_ghost_boundary(&o.result, total);
                pass &= ok;
                details.push(format!("{name}: {d}"));
            }
            Err(e) => {
                pass = false;
                details.push(format!("{name}: {e}"));
            }
        }
    }
    let s = scenario("planar_minus_orbit");
    let expected = s.t.unwrap().abs().sqrt();
    match run_census(&s, &quiet()) {
        Ok(o) => {
            let orbits: Vec<_> = o.result.embedded().collect();
            let err = orbits
                .iter()
                .flat_map(|o| o.samples.iter())
                .map(|p| (linalg::norm(p) - expected).abs())
                .fold(0.0, f64::max);
            let ok = orbits.len() == 1 && err < TOL_RADIUS;
            pass &= ok;
            details.push(format!("radius error {err:.1e}"));
        }
        Err(e) => {
            pass = false;
            details.push(e.to_string());
        }
    }
    Check::new(pass, details.join("; "))
}

fn period_doubling() -> Check {
    let r = match run_sweep(&scenario("period_doubling_sweep"), &quiet()) {
        Ok(o) => o.result,
        Err(e) => return Check::new(false, e.to_string()),
    };
    let mut bad = Vec::new();
    for (&t, c) in r.grid.iter().zip(&r.censuses) {
        let w = c.slice_weights();
        let get = |d: u32| w.get(&d).copied().unwrap_or(0);
        let mut slice2: Vec<Option<i32>> =
            c.orbits.iter().filter(|o| o.total_period == 2.0).map(|o| o.weight()).collect();
        slice2.sort();
        let expected_slice = if t > 0.0 { vec![Some(-1), Some(0)] } else { vec![Some(-1)] };
        if get(1) != 1 || (t.abs() > PD_EXEMPT_HALF_WIDTH && get(2) != -1) || slice2 != expected_slice {
            bad.push(t);
        }
    }
    let pds: Vec<_> = r.events.iter().filter(|e| e.kind == EventKind::PeriodDoubling).collect();
    let located = r.events.len() == 1 && pds.len() == 1 && pds[0].t_star.abs() < TOL_EVENT_LOCATION;
    Check::new(
        bad.is_empty() && located && r.verdict.pass,
        format!(
            "{} grid points off the table, period doubling at {:?}",
            bad.len(),
            pds.first().map(|e| e.t_star)
        ),
    )
}

fn random_matrix(rng: &mut ChaCha8Rng) -> SquareMatrix {
    let n = rng.gen_range(1..=7);
    SquareMatrix::new(n, (0..n * n).map(|_| rng.gen_range(-3.0..3.0)).collect()).unwrap()
}

fn degenerate(m: &SquareMatrix) -> bool {
    let Ok(spec) = eigenvalues(m) else { return true };
    if real_eigenvalue_counts(&spec).is_err() {
        return true;
    }
    (1..=4).any(|d| {
        let p = m.pow(d);
        let scale = (1.0 + p.max_abs()).powi(m.dim() as i32);
        p.shift(-1.0).det().abs() <= TOL_DEGENERATE * scale
    })
}

fn parity_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut failures, mut resampled, mut accepted) = (0, 0, 0);
    while accepted < PARITY_SAMPLES {
        let m = random_matrix(&mut rng);
        if degenerate(&m) {
            resampled += 1;
            continue;
        }
        accepted += 1;
        let (m1, m2) = real_eigenvalue_counts(&eigenvalues(&m).unwrap()).unwrap();
        for d in 1..=4u32 {
            let count = if d % 2 == 1 { m1 } else { m2 };
            let expected = if count % 2 == 0 { 1 } else { -1 };
            if sign_det_shifted(&m, d).ok() != Some(expected) {
                failures += 1;
            }
        }
    }
    Check::new(
        failures == 0,
        format!("{accepted} matrices, {resampled} resampled, {failures} failures"),
    )
}

fn lefschetz_oracle() -> Check {
    let started = Instant::now();
    let o = match run_lefschetz(&scenario("cat_map"), &quiet()) {
        Ok(o) => o,
        Err(e) => return Check::new(false, e.to_string()),
    };
    let t = &o.result;
    let matrix = vec![vec![2, 1], vec![1, 1]];
    let brute = brute_force_orbit_count(&DiscreteMapSpec::ToralAutomorphism { matrix }, ORACLE_D_MAX);
    let h = &scenario("cat_map").lefschetz.unwrap().homology;
    let identity = (1..=ORACLE_D_MAX).all(|n| {
        let lhs: BigInt = (1..=n).filter(|d| n % d == 0).map(|d| BigInt::from(d) * &t.weights[&d]).sum();
        lefschetz_number(h, n).is_ok_and(|l| l == lhs)
    });
    let elapsed = started.elapsed();
    let agrees = brute.is_ok_and(|b| b.weights == t.weights) && t.oracle_agrees == Some(true);
    let w: Vec<String> = t.weights.values().map(ToString::to_string).collect();
    Check::new(
        agrees && identity && t.weights.len() == ORACLE_D_MAX as usize && elapsed < ORACLE_TIME_LIMIT,
        format!("weights [{}], inversion identity {identity}, {:.2} s", w.join(", "), elapsed.as_secs_f64()),
    )
}

fn family_formula() -> Check {
    let hopf: Vec<i64> = (1..=6).map(|d| weight_family(0, 0, 2, d)).collect();
    let mut geodesic_ok = true;
    for n in 2..=4u32 {
        // n - 1 contracting and n - 1 expanding directions
        let diag: Vec<f64> = (0..n - 1).flat_map(|j| [0.3 + 0.1 * j as f64, 2.5 + 0.7 * j as f64]).collect();
        let f = SquareMatrix::from_diag(&diag);
        let expected = if (n - 1) % 2 == 0 { 1 } else { -1 };
        let opts = RigidityOpts::default();
        geodesic_ok &= epsilon(&f, 1, opts) == Ok(expected) && epsilon(&f, 2, opts) == Ok(expected);
    }
    Check::new(
        hopf == [2, 0, 0, 0, 0, 0] && geodesic_ok,
        format!("hopf family weights {hopf:?}, geodesic signs {geodesic_ok}"),
    )
}

/// Monomial exponents of total degree `k` in `dim` variables.
fn monomials(dim: usize, k: u32) -> Vec<Vec<u32>> {
    if dim == 1 {
        return vec![vec![k]];
    }
    (0..=k)
        .rev()
        .flat_map(|a| {
            monomials(dim - 1, k - a).into_iter().map(move |mut rest| {
                rest.insert(0, a);
                rest
            })
        })
        .collect()
}

fn unit(dim: usize, i: usize, power: u32) -> Vec<u32> {
    let mut p = vec![0; dim];
    p[i] = power;
    p
}

/// A rotating focus whose linear growth rate moves between generic endpoint
/// values, with random quadratic and cubic terms (coefficients affine in `t`)
/// under a confining cubic `-kappa |x|^2 x`. In three dimensions the extra
/// direction is hyperbolic with a random sign.
fn random_family(rng: &mut ChaCha8Rng, dim: usize) -> FieldSpec {
    let sign = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| {
        let v = rng.gen_range(lo..hi);
        if rng.gen_bool(0.5) {
            v
        } else {
            -v
        }
    };
    let mu0 = sign(rng, 0.1, 0.5);
    let mu1 = sign(rng, 0.1, 0.5);
    let omega = rng.gen_range(1.2..1.5);
    let kappa = rng.gen_range(0.6..1.2);
    let mut p = PolynomialField::zero(dim);
    p.push(0, Term::new(vec![mu0, mu1 - mu0], unit(dim, 0, 1)));
    p.push(1, Term::new(vec![mu0, mu1 - mu0], unit(dim, 1, 1)));
    p.push(0, Term::constant(-omega, unit(dim, 1, 1)));
    p.push(1, Term::constant(omega, unit(dim, 0, 1)));
    if dim == 3 {
        let lambda = sign(rng, 0.5, 1.0);
        p.push(2, Term::constant(lambda, unit(dim, 2, 1)));
    }
    for i in 0..dim {
        for j in 0..dim {
            let mut pw = unit(dim, j, 2);
            pw[i] += 1;
            p.push(i, Term::constant(-kappa, pw));
        }
        for pw in monomials(dim, 2) {
            p.push(i, Term::new(vec![rng.gen_range(-0.3..0.3), rng.gen_range(-0.2..0.2)], pw));
        }
        for pw in monomials(dim, 3) {
            p.push(i, Term::new(vec![rng.gen_range(-0.15..0.15), rng.gen_range(-0.1..0.1)], pw));
        }
    }
    FieldSpec::polynomial(p)
}

/// The auto-check of the random-family window: every record keeps clear of
/// the region boundary and the period cutoff, no track leaves the window and
/// the endpoint slices are non-degenerate.
fn window_is_clear(r: &SweepReport, window: &Window) -> bool {
    let grid_ends = [r.grid[0], r.grid[r.grid.len() - 1]];
    r.censuses.iter().all(|c| {
        c.min_margin() >= FAMILY_SPATIAL_MARGIN
            && c.orbits.iter().all(|o| window.s_max - o.total_period >= FAMILY_PERIOD_MARGIN)
            && c.ghosts.iter().all(|g| window.s_max - g.period >= FAMILY_PERIOD_MARGIN)
    }) && r.events.iter().all(|e| e.kind != EventKind::WindowBoundary && !e.near_boundary)
        && grid_ends.iter().all(|t| !r.verdict.degenerate_points.contains(t))
}

fn family_opts() -> SweepOpts {
    SweepOpts {
        checkpoints: 3,
        ..SweepOpts::default()
    }
}

fn invariance_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xfa11);
    let (mut done, mut draws, mut failures) = (0, 0, Vec::new());
    let mut kinds: BTreeMap<String, usize> = BTreeMap::new();
    while done < RANDOM_FAMILIES && draws < FAMILY_MAX_DRAWS {
        draws += 1;
        let dim = if done % 2 == 0 { 2 } else { 3 };
        let field = random_family(&mut rng, dim);
        let family = FamilySpec {
            model: Model::Flow(field),
            range: (0.0, 1.0),
        };
        let window = Window::new(Region::ball(dim, 2.5), 7.0);
        let grid = uniform_grid(family.range, if dim == 2 { 33 } else { 17 });
        let r = match audit_invariance(&family, &window, &grid, &family_opts()) {
            Ok(r) => r,
            Err(_) => continue,
        };
        if !window_is_clear(&r, &window) {
            continue;
        }
        done += 1;
        for e in &r.events {
            *kinds.entry(format!("{:?}", e.kind)).or_default() += 1;
        }
        let events_ok = r.events.iter().all(|e| e.weight_before == e.weight_after);
        if !r.verdict.pass || !events_ok {
            failures.push(draws);
        }
    }
    Check::new(
        done == RANDOM_FAMILIES && failures.is_empty(),
        format!("{done} families from {draws} draws, events {kinds:?}, failing draws {failures:?}"),
    )
}

fn golden_files() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    files
}

/// Every document of one run, or the error text.
fn run_all(path: &Path, jobs: Option<usize>) -> Result<Vec<(String, String)>, String> {
    let s = load(path, Overrides::default()).map_err(|e| e.to_string())?;
    let config = RunConfig {
        jobs,
        no_meta: true,
        out_dir: None,
    };
    let mut files = Vec::new();
    if s.model.is_some() {
        let run = if s.sweep.is_some() {
            run_sweep(&s, &config).map(|o| o.files)
        } else {
            run_census(&s, &config).map(|o| o.files)
        };
        files.extend(run.map_err(|e| e.to_string())?);
    }
    if s.lefschetz.is_some() {
        files.extend(run_lefschetz(&s, &config).map(|o| o.files).map_err(|e| e.to_string())?);
    }
    Ok(files)
}

fn determinism() -> Check {
    let mut differing = Vec::new();
    let files = golden_files();
    for path in &files {
        let first = run_all(path, None);
        let again = run_all(path, Some(1));
        if first != again {
            differing.push(path.file_name().unwrap().to_string_lossy().into_owned());
        }
    }
    Check::new(
        differing.is_empty() && !files.is_empty(),
        format!("{} golden scenarios, differing {differing:?}", files.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("hopf census", hopf_census),
        ("planar totals", planar_sweeps),
        ("period doubling", period_doubling),
        ("parity identity", parity_suite),
        ("lefschetz oracle", lefschetz_oracle),
        ("family formula", family_formula),
        ("invariance suite", invariance_suite),
        ("determinism", determinism),
    ];
    // optional criterion numbers on the command line select a subset
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let started = Instant::now();
        let c = check();
        if !c.pass {
            failed += 1;
        }
        println!(
            "{} {}. {name} ({:.1} s): {}",
            if c.pass { "PASS" } else { "FAIL" },
            i + 1,
            started.elapsed().as_secs_f64(),
            c.detail
        );
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
