//! Censuses of ghost orbits and periodic orbits inside a window, with
//! holonomy data and weights.

mod refine;
mod zeros;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::{
    flow_samples, flow_samples_partial, CylinderMap, FieldSpec, FlowError, IntegratorOpts, Model,
};
use crate::holonomy::{classify_holonomy, weight_periodic, RigidityOpts, RigidityReport, WeightedOrbitClass};
use crate::linalg::{self, SquareMatrix};

pub use refine::{
    extract_holonomy, extract_holonomy_with, refine_model, refine_orbit, refine_periodic_point,
    Orbit, RefineError, RefineOpts,
};
pub use zeros::{
    enumerate_ghosts, find_zeros, invariant_plane, plane_residual, refine_zero, GhostKind,
    GhostOrbitRec, ZeroRec,
};
pub(crate) use zeros::zero_record;

/// Spatial part of a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Region {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl Region {
    pub fn ball(dim: usize, radius: f64) -> Region {
        Region::Ball {
            center: vec![0.0; dim],
            radius,
        }
    }

    pub fn cube(dim: usize, half_width: f64) -> Region {
        Region::Box {
            lower: vec![-half_width; dim],
            upper: vec![half_width; dim],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Ball { center, .. } => center.len(),
            Region::Box { lower, .. } => lower.len(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            Region::Ball { center, radius } => {
                if !(*radius > 0.0 && radius.is_finite()) || center.iter().any(|c| !c.is_finite()) {
                    return Err("ball needs a finite center and a positive radius".into());
                }
            }
            Region::Box { lower, upper } => {
                if lower.len() != upper.len()
                    || lower.iter().zip(upper).any(|(l, u)| !(l < u && l.is_finite() && u.is_finite()))
                {
                    return Err("box needs finite lower < upper in every coordinate".into());
                }
            }
        }
        Ok(())
    }

    /// Signed distance to the boundary, positive inside.
    pub fn margin(&self, x: &[f64]) -> f64 {
        match self {
            Region::Ball { center, radius } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                radius - linalg::norm(&d)
            }
            Region::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| (v - l).min(u - v))
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.margin(x) > 0.0
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Region::Ball { radius, .. } => 2.0 * radius,
            Region::Box { lower, upper } => linalg::norm(
                &upper.iter().zip(lower).map(|(u, l)| u - l).collect::<Vec<_>>(),
            ),
        }
    }

    /// Largest `|x|` over the region.
    pub fn bounding_radius(&self) -> f64 {
        match self {
            Region::Ball { center, radius } => linalg::norm(center) + radius,
            Region::Box { lower, upper } => linalg::norm(
                &lower
                    .iter()
                    .zip(upper)
                    .map(|(l, u)| l.abs().max(u.abs()))
                    .collect::<Vec<_>>(),
            ),
        }
    }

    /// Cell-centred grid with `per_axis` points along each axis of the
    /// bounding box, restricted to the region.
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let (lo, hi): (Vec<f64>, Vec<f64>) = match self {
            Region::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            Region::Box { lower, upper } => (lower.clone(), upper.clone()),
        };
        let n = lo.len();
        let per_axis = per_axis.max(1);
        let total = per_axis.pow(n as u32);
        let mut out = Vec::with_capacity(total);
        for idx in 0..total {
            let mut rem = idx;
            let mut p = vec![0.0; n];
            for k in (0..n).rev() {
                let i = rem % per_axis;
                rem /= per_axis;
                p[k] = lo[k] + (i as f64 + 0.5) * (hi[k] - lo[k]) / per_axis as f64;
            }
            if self.contains(&p) {
                out.push(p);
            }
        }
        out
    }
}

/// Region x period cutoff (x optional degree cutoff).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub region: Region,
    pub s_max: f64,
    pub degree_max: Option<u32>,
}

impl Window {
    pub fn new(region: Region, s_max: f64) -> Window {
        Window {
            region,
            s_max,
            degree_max: None,
        }
    }

    pub fn with_degree_max(mut self, d: Option<u32>) -> Window {
        self.degree_max = d;
        self
    }

    pub fn validate(&self) -> Result<(), CensusError> {
        self.region.validate().map_err(CensusError::InvalidWindow)?;
        if !(self.s_max > 0.0 && self.s_max.is_finite()) {
            return Err(CensusError::InvalidWindow("s_max must be positive and finite".into()));
        }
        if self.degree_max == Some(0) {
            return Err(CensusError::InvalidWindow("degree_max must be at least 1".into()));
        }
        Ok(())
    }

    pub fn admits(&self, degree: u32, total_period: f64) -> bool {
        total_period <= self.s_max && self.degree_max.is_none_or(|m| degree <= m)
    }
}

/// Seeding of the periodic orbit search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeedSpec {
    /// Grid points per axis; chosen from the dimension when absent.
    pub per_axis: Option<usize>,
    /// Log-spaced period guesses in `[s_min_fraction * s_max, s_max]`.
    pub period_guesses: usize,
    pub s_min_fraction: f64,
    /// Period guesses kept per grid point after the recurrence prefilter.
    pub minima_per_point: usize,
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec {
            per_axis: None,
            period_guesses: 24,
            s_min_fraction: 0.02,
            minima_per_point: 2,
        }
    }
}

impl SeedSpec {
    pub fn per_axis_for(&self, dim: usize) -> usize {
        self.per_axis
            .unwrap_or_else(|| (256f64.powf(1.0 / dim as f64).round() as usize).clamp(3, 16))
    }

    pub fn period_grid(&self, s_max: f64) -> Vec<f64> {
        let k = self.period_guesses.max(1);
        if k == 1 {
            return vec![s_max];
        }
        let lo = (self.s_min_fraction * s_max).ln();
        let hi = s_max.ln();
        (0..k)
            .map(|i| (lo + (hi - lo) * i as f64 / (k - 1) as f64).exp())
            .collect()
    }
}

/// Tolerances of the census.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CensusOpts {
    pub refine: RefineOpts,
    pub rigidity: RigidityOpts,
    /// Integrator tolerance of the recurrence prefilter.
    pub prefilter_tol: f64,
    /// Seeds survive the prefilter when `|F(s, x) - x| < fraction * diam(region)`.
    pub prefilter_fraction: f64,
    pub tol_dedup: f64,
    pub tol_period_dedup: f64,
    pub tol_zero_dedup: f64,
    pub tol_trace: f64,
    /// Newton failures above this fraction of all seeds flag the census incomplete.
    pub incomplete_fraction: f64,
}

impl Default for CensusOpts {
    fn default() -> Self {
        CensusOpts {
            refine: RefineOpts::default(),
            rigidity: RigidityOpts::default(),
            prefilter_tol: 1e-6,
            prefilter_fraction: 0.3,
            tol_dedup: 1e-5,
            tol_period_dedup: 1e-6,
            tol_zero_dedup: 1e-7,
            tol_trace: 1e-8,
            incomplete_fraction: 0.5,
        }
    }
}

impl CensusOpts {
    pub fn with_integrator(mut self, integrator: IntegratorOpts) -> Self {
        self.refine.integrator = integrator;
        self
    }
}

/// A degree-`d` cover of an embedded periodic orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbitRec {
    pub orbit_id: usize,
    pub base_point: Vec<f64>,
    pub minimal_period: f64,
    pub degree: u32,
    pub total_period: f64,
    pub samples: Vec<Vec<f64>>,
    /// Linearized flow over the total period.
    pub monodromy: SquareMatrix,
    /// Linearized return map of the `d`-fold cover.
    pub holonomy: SquareMatrix,
    /// Rigidity of the embedded orbit's holonomy.
    pub rigidity: RigidityReport,
    /// `None` when the embedded orbit is not super-rigid.
    pub class: Option<WeightedOrbitClass>,
    /// Smallest signed distance of the orbit to the region boundary.
    pub margin: f64,
}

impl PeriodicOrbitRec {
    pub fn weight(&self) -> Option<i32> {
        self.class.map(|c| c.weight)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub grid_points: usize,
    pub seeds_total: usize,
    pub seeds_after_prefilter: usize,
    pub newton_failures: usize,
    pub collapsed: usize,
    pub duplicates: usize,
    pub outside_window: usize,
    pub zero_newton_failures: usize,
    pub ghost_rigidity_failures: usize,
    pub unweighted_orbits: usize,
    pub incomplete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Census {
    pub t: Option<f64>,
    pub window: Window,
    pub zeros: Vec<ZeroRec>,
    pub ghosts: Vec<GhostOrbitRec>,
    pub orbits: Vec<PeriodicOrbitRec>,
    pub total_weight: i64,
    pub weight_by_degree: BTreeMap<u32, i64>,
    /// Weights per integer total period; only for mapping-cylinder models,
    /// whose orbits are naturally graded by period.
    pub weight_by_period: BTreeMap<u32, i64>,
    pub diagnostics: Diagnostics,
}

impl Census {
    /// Embedded (degree one) orbit records.
    pub fn embedded(&self) -> impl Iterator<Item = &PeriodicOrbitRec> {
        self.orbits.iter().filter(|o| o.degree == 1)
    }

    /// Slice weights used in sweep tables: per period for cylinder models,
    /// per degree otherwise.
    pub fn slice_weights(&self) -> &BTreeMap<u32, i64> {
        if self.weight_by_period.is_empty() {
            &self.weight_by_degree
        } else {
            &self.weight_by_period
        }
    }

    /// Smallest margin of any record to the region boundary.
    pub fn min_margin(&self) -> f64 {
        self.ghosts
            .iter()
            .map(|g| g.margin)
            .chain(self.orbits.iter().map(|o| o.margin))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CensusError {
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("window region has dimension {region}, model has {model}")]
    DimensionMismatch { region: usize, model: usize },
    #[error(transparent)]
    Flow(#[from] FlowError),
}

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Distance from `p` to the curve of `orbit`, refined between samples by a
/// golden-section search in the flow time.
pub fn distance_to_orbit(model: &Model, orbit: &Orbit, p: &[f64], t: Option<f64>, opts: &IntegratorOpts) -> f64 {
    let (idx, coarse) = orbit
        .samples
        .iter()
        .enumerate()
        .map(|(i, q)| (i, linalg::norm(&sub(q, p))))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap_or((0, f64::INFINITY));
    let Model::Flow(field) = model else {
        return coarse;
    };
    let k = orbit.samples.len();
    if k < 2 {
        return coarse;
    }
    let h = orbit.minimal_period / k as f64;
    let start = &orbit.samples[(idx + k - 1) % k];
    let dist = |tau: f64| -> f64 {
        flow_samples(field, start, &[tau], t, opts)
            .map(|v| linalg::norm(&sub(&v[0], p)))
            .unwrap_or(f64::INFINITY)
    };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0, 2.0 * h);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (dist(c), dist(d));
    for _ in 0..40 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = dist(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = dist(d);
        }
    }
    coarse.min(fc).min(fd)
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Degree-`d` records of an embedded orbit for every admissible `d`.
pub fn orbit_records(
    orbit_id: usize,
    orbit: &Orbit,
    window: &Window,
    rigidity: RigidityOpts,
) -> Vec<PeriodicOrbitRec> {
    let report = match classify_holonomy(&orbit.holonomy, rigidity) {
        Ok(r) => r,
        Err(_) => return Vec::new(),
    };
    let margin = orbit
        .samples
        .iter()
        .map(|p| window.region.margin(p))
        .fold(f64::INFINITY, f64::min);
    let mut out = Vec::new();
    let mut d = 1u32;
    loop {
        let total = orbit.minimal_period * d as f64;
        if !window.admits(d, total) {
            break;
        }
        let class = weight_periodic(&orbit.holonomy, d, rigidity).ok();
        out.push(PeriodicOrbitRec {
            orbit_id,
            base_point: orbit.base_point.clone(),
            minimal_period: orbit.minimal_period,
            degree: d,
            total_period: total,
            samples: orbit.samples.clone(),
            monodromy: orbit.monodromy.pow(d),
            holonomy: orbit.holonomy.pow(d),
            rigidity: report.clone(),
            class,
            margin,
        });
        d += 1;
    }
    out
}

/// Whether `orbit` lies inside the window as an embedded orbit.
pub fn orbit_in_window(orbit: &Orbit, window: &Window) -> bool {
    orbit.minimal_period <= window.s_max && orbit.samples.iter().all(|p| window.region.contains(p))
}

struct Seed {
    point: Vec<f64>,
    period: f64,
}

/// Grid points for a model, projected onto the constraint sphere if any.
pub fn seed_points(model: &Model, region: &Region, seeds: &SeedSpec) -> Vec<Vec<f64>> {
    let grid = region.grid(seeds.per_axis_for(region.dim()));
    match model {
        Model::Flow(f) if f.sphere_radius().is_some() => {
            let r = f.sphere_radius().unwrap_or(1.0);
            let mut pts: Vec<Vec<f64>> = Vec::new();
            for mut p in grid {
                if linalg::norm(&p) < 1e-3 * r {
                    continue;
                }
                f.project(&mut p);
                if region.contains(&p) && !pts.iter().any(|q| inf_dist(q, &p) < 1e-9) {
                    pts.push(p);
                }
            }
            pts
        }
        _ => grid,
    }
}

/// Indices of local minima of `res` below `threshold`, smallest first.
fn recurrence_minima(res: &[f64], threshold: f64) -> Vec<usize> {
    let mut minima: Vec<(f64, usize)> = (0..res.len())
        .filter(|&k| {
            res[k] < threshold
                && (k == 0 || res[k] <= res[k - 1])
                && (k + 1 >= res.len() || res[k] <= res[k + 1])
        })
        .map(|k| (res[k], k))
        .collect();
    minima.sort_by(|a, b| a.partial_cmp(b).unwrap());
    minima.into_iter().map(|(_, k)| k).collect()
}

/// Recurrence prefilter: for each grid point keep the period guesses at
/// which `|F(s, x) - x|` has a local minimum below the threshold.
fn prefilter(
    field: &FieldSpec,
    points: &[Vec<f64>],
    periods: &[f64],
    t: Option<f64>,
    window: &Window,
    seeds: &SeedSpec,
    opts: &CensusOpts,
) -> Vec<Seed> {
    let coarse = IntegratorOpts {
        tol: opts.prefilter_tol,
        bounding_box: 4.0 * window.region.bounding_radius() + 1.0,
        ..opts.refine.integrator
    };
    let threshold = opts.prefilter_fraction * window.region.diameter();
    let backward = field.reversed();
    let t0 = t.unwrap_or(0.0);
    let per_point: Vec<Vec<Seed>> = points
        .par_iter()
        .map(|x| {
            let y0 = field.value(x, t0);
            let ny = linalg::norm(&y0);
            if ny < 1e-12 {
                return Vec::new();
            }
            let mut out: Vec<Seed> = Vec::new();
            let keep = |ks: Vec<usize>, out: &mut Vec<Seed>| {
                for k in ks.into_iter().take(seeds.minima_per_point) {
                    if !out.iter().any(|s| s.period == periods[k]) {
                        out.push(Seed {
                            point: x.clone(),
                            period: periods[k],
                        });
                    }
                }
            };
            // repelling orbits recur under the reversed flow
            for f in [field, &backward] {
                let Ok((states, _)) = flow_samples_partial(f, x, periods, t, &coarse) else {
                    continue;
                };
                let res: Vec<f64> = states.iter().map(|y| linalg::norm(&sub(y, x))).collect();
                keep(recurrence_minima(&res, threshold), &mut out);
            }
            out
        })
        .collect();
    per_point.into_iter().flatten().collect()
}

/// Builds the census of `model` at parameter `t` inside `window`.
///
/// Periodic orbits come from seeded refinements: a region grid times
/// log-spaced period guesses, thinned by the recurrence prefilter for flows.
/// Results are deduplicated sequentially in seed order and sorted by
/// `(period, base point)`, so the census does not depend on thread count.
pub fn build_census(
    model: &Model,
    t: Option<f64>,
    window: &Window,
    seeds: &SeedSpec,
    opts: &CensusOpts,
) -> Result<Census, CensusError> {
    window.validate()?;
    model.validate()?;
    if window.region.dim() != model.dim() {
        return Err(CensusError::DimensionMismatch {
            region: window.region.dim(),
            model: model.dim(),
        });
    }
    let mut diag = Diagnostics::default();
    let points = seed_points(model, &window.region, seeds);
    diag.grid_points = points.len();

    let (zeros, ghosts) = match model {
        Model::Flow(field) => {
            let (zeros, zero_failures) = find_zeros(field, &window.region, t, &points, opts.tol_zero_dedup);
            diag.zero_newton_failures = zero_failures;
            let (ghosts, rigidity_failures) = enumerate_ghosts(&zeros, window, opts.tol_trace);
            diag.ghost_rigidity_failures = rigidity_failures;
            (zeros, ghosts)
        }
        Model::Cylinder(_) => (Vec::new(), Vec::new()),
    };

    let mut refine_opts = opts.refine;
    refine_opts.s_limit = refine_opts.s_limit.min(1.5 * window.s_max);
    refine_opts.box_radius = refine_opts
        .box_radius
        .min(4.0 * window.region.bounding_radius() + 1.0);

    let seed_list: Vec<Seed> = match model {
        Model::Flow(field) => {
            let periods = seeds.period_grid(window.s_max);
            diag.seeds_total = points.len() * periods.len();
            prefilter(field, &points, &periods, t, window, seeds, opts)
        }
        Model::Cylinder(_) => {
            let max_m = (window.s_max.floor() as u32).min(opts.refine.max_divisor).max(1);
            let list: Vec<Seed> = points
                .iter()
                .flat_map(|p| {
                    (1..=max_m).map(move |m| Seed {
                        point: p.clone(),
                        period: m as f64,
                    })
                })
                .collect();
            diag.seeds_total = list.len();
            list
        }
    };
    diag.seeds_after_prefilter = seed_list.len();

    let results: Vec<Result<Orbit, RefineError>> = seed_list
        .par_iter()
        .map(|s| refine_model(model, &s.point, s.period, t, &refine_opts))
        .collect();

    let mut accepted: Vec<Orbit> = Vec::new();
    for r in results {
        match r {
            Ok(orbit) => {
                if !orbit_in_window(&orbit, window) {
                    diag.outside_window += 1;
                    continue;
                }
                if is_duplicate(model, &accepted, &orbit, t, opts) {
                    diag.duplicates += 1;
                    continue;
                }
                accepted.push(orbit);
            }
            Err(e) if e.is_legitimate_rejection() => diag.collapsed += 1,
            Err(_) => diag.newton_failures += 1,
        }
    }
    accepted.sort_by(|a, b| {
        a.minimal_period
            .partial_cmp(&b.minimal_period)
            .unwrap()
            .then(a.base_point.partial_cmp(&b.base_point).unwrap())
    });

    let cylinder = matches!(model, Model::Cylinder(_));
    let mut orbits = Vec::new();
    for (id, orbit) in accepted.iter().enumerate() {
        orbits.extend(orbit_records(id, orbit, window, opts.rigidity));
    }
    diag.unweighted_orbits = orbits.iter().filter(|o| o.class.is_none()).count();
    diag.incomplete =
        diag.newton_failures as f64 > opts.incomplete_fraction * diag.seeds_total.max(1) as f64;
    Ok(assemble(t, window.clone(), zeros, ghosts, orbits, diag, cylinder))
}

/// Totals and per-slice weights of a set of records.
pub fn assemble(
    t: Option<f64>,
    window: Window,
    zeros: Vec<ZeroRec>,
    ghosts: Vec<GhostOrbitRec>,
    orbits: Vec<PeriodicOrbitRec>,
    diagnostics: Diagnostics,
    cylinder: bool,
) -> Census {
    let mut weight_by_degree: BTreeMap<u32, i64> = BTreeMap::new();
    let mut weight_by_period: BTreeMap<u32, i64> = BTreeMap::new();
    let mut total = 0i64;
    for g in &ghosts {
        let w = g.weight.unwrap_or(0) as i64;
        total += w;
        *weight_by_degree.entry(g.degree).or_default() += w;
    }
    for o in &orbits {
        let w = o.weight().unwrap_or(0) as i64;
        total += w;
        *weight_by_degree.entry(o.degree).or_default() += w;
        if cylinder {
            *weight_by_period.entry(o.total_period.round() as u32).or_default() += w;
        }
    }
    Census {
        t,
        window,
        zeros,
        ghosts,
        orbits,
        total_weight: total,
        weight_by_degree,
        weight_by_period,
        diagnostics,
    }
}

fn is_duplicate(model: &Model, accepted: &[Orbit], orbit: &Orbit, t: Option<f64>, opts: &CensusOpts) -> bool {
    accepted.iter().any(|a| same_orbit(model, a, orbit, t, opts.tol_period_dedup, opts.tol_dedup, &opts.refine.integrator))
}

/// Whether two refined orbits are the same closed orbit.
pub fn same_orbit(
    model: &Model,
    a: &Orbit,
    b: &Orbit,
    t: Option<f64>,
    tol_period: f64,
    tol_space: f64,
    opts: &IntegratorOpts,
) -> bool {
    let rel = (a.minimal_period - b.minimal_period).abs() / a.minimal_period;
    if rel > tol_period.max(1e-9) {
        return false;
    }
    if let Model::Cylinder(_) = model {
        return a.samples.iter().any(|q| inf_dist(q, &b.base_point) < tol_space);
    }
    // cheap rejection: the base point must be within a chord of a sample
    let chord = a
        .samples
        .windows(2)
        .map(|w| linalg::norm(&sub(&w[1], &w[0])))
        .fold(0.0, f64::max);
    let coarse = a
        .samples
        .iter()
        .map(|q| linalg::norm(&sub(q, &b.base_point)))
        .fold(f64::INFINITY, f64::min);
    if coarse > chord + tol_space {
        return false;
    }
    distance_to_orbit(model, a, &b.base_point, t, opts) < tol_space
}

/// Census of a single vector field.
pub fn build_field_census(
    field: &FieldSpec,
    t: Option<f64>,
    window: &Window,
    seeds: &SeedSpec,
    opts: &CensusOpts,
) -> Result<Census, CensusError> {
    build_census(&Model::Flow(field.clone()), t, window, seeds, opts)
}

/// Census of the mapping-cylinder flow of a discrete map.
pub fn build_map_census(
    map: &CylinderMap,
    t: Option<f64>,
    window: &Window,
    seeds: &SeedSpec,
    opts: &CensusOpts,
) -> Result<Census, CensusError> {
    build_census(&Model::Cylinder(map.clone()), t, window, seeds, opts)
}
