//! Sweeps over one-parameter families: continuation of census records,
//! localization and classification of the events at which the census
//! changes, and the audit of the window total along the sweep.

mod track;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::census::{
    assemble, build_census, enumerate_ghosts, invariant_plane, orbit_in_window, orbit_records,
    same_orbit, zero_record, Census, CensusError, CensusOpts, Diagnostics, GhostKind,
    GhostOrbitRec, Orbit, SeedSpec, Window, ZeroRec,
};
use crate::flow::{FamilySpec, Model};
use crate::holonomy::{epsilon, weight_ghost};
use crate::linalg::{self, Lu};

pub use track::{orbit_margin, LossReason, LostTrack, State};
use track::{det_shift, inf_dist, nearest_pair, Continuer};

/// Controls of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepOpts {
    pub census: CensusOpts,
    pub seeds: SeedSpec,
    /// Full censuses per sweep, evenly spaced over the grid.
    pub checkpoints: usize,
    /// Events are localized to a parameter bracket of this width.
    pub tol_event: f64,
    /// Records closer than this to the window boundary at a grid point are
    /// reported as window-boundary events.
    pub tol_margin: f64,
    /// Largest step of `continue_record`.
    pub max_step: f64,
    /// Branch-switch probe displacements, as fractions of the region radius,
    /// tried after an absolute displacement of `1e-3`.
    pub probe_fractions: Vec<f64>,
}

impl Default for SweepOpts {
    fn default() -> Self {
        SweepOpts {
            census: CensusOpts::default(),
            seeds: SeedSpec::default(),
            checkpoints: 8,
            tol_event: 1e-8,
            tol_margin: 1e-3,
            max_step: 0.05,
            probe_fractions: vec![0.003, 0.01, 0.03, 0.1, 0.2, 0.4],
        }
    }
}

/// `n` evenly spaced parameter values covering `range`.
pub fn uniform_grid(range: (f64, f64), n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum EventKind {
    /// A holonomy eigenvalue crosses `+1`.
    Fold,
    /// A holonomy eigenvalue crosses `-1`.
    PeriodDoubling,
    /// The trace of a ghost plane crosses zero; periodic orbits and ghosts exchange.
    GhostBoundary,
    /// `det d_x Y` crosses zero.
    ZeroDegeneracy,
    /// A record enters or leaves the window.
    WindowBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RecordKind {
    Orbit,
    Zero,
}

/// Side of an event on which the emitted branch exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Side {
    Before,
    After,
    Both,
}

/// A tracked record involved in an event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Carrier {
    pub track: usize,
    pub record: RecordKind,
    /// `(eps_1, eps_2)` of an orbit carrier at the grid points around the event.
    pub signs_before: Option<(i8, i8)>,
    pub signs_after: Option<(i8, i8)>,
    /// Minimal period of an orbit carrier at the nearest grid point.
    pub period: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub t_star: f64,
    pub bracket: (f64, f64),
    pub kind: EventKind,
    pub carriers: Vec<Carrier>,
    /// Window totals at the grid points enclosing the event.
    pub weight_before: i64,
    pub weight_after: i64,
    /// For period doublings and ghost boundaries: where the emitted branch of
    /// periodic orbits was found.
    pub branch_side: Option<Side>,
    /// Reported by the margin check at a grid point rather than localized.
    pub near_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    /// First grid interval across which the total changes.
    pub first_violation: Option<(f64, f64)>,
    /// Every interval with a change contains a window-boundary event.
    pub explained_by_window: bool,
    /// Events other than window crossings whose totals differ.
    pub event_mismatches: Vec<usize>,
    /// Parameter values where distinct events fall within `tol_event`.
    pub unresolved: Vec<f64>,
    /// Grid points whose slice has undefined weights; left out of the comparison.
    pub degenerate_points: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub index: usize,
    pub t: f64,
    pub census_total: i64,
    pub tracked_total: i64,
    /// Records of the full census not yet followed by any track.
    pub discovered: usize,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackSummary {
    pub id: usize,
    pub record: RecordKind,
    pub first_t: f64,
    pub last_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub grid: Vec<f64>,
    /// Census at each grid point, assembled from the tracked records.
    pub censuses: Vec<Census>,
    pub totals: Vec<i64>,
    pub events: Vec<EventRecord>,
    pub checkpoints: Vec<Checkpoint>,
    pub tracks: Vec<TrackSummary>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("parameter grid needs at least two increasing values")]
    InvalidGrid,
    #[error(transparent)]
    Census(#[from] CensusError),
}

/// A record handed to `continue_record`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Record {
    Orbit(Orbit),
    Zero(ZeroRec),
    Ghost(GhostOrbitRec),
}

/// Continues a record of `family` from `t_from` to `t_to` by secant
/// prediction and Newton correction in steps of at most `opts.max_step`.
/// Ghost eigenvalue pairs are followed by nearest match at every step.
pub fn continue_record(
    family: &FamilySpec,
    window: &Window,
    record: &Record,
    t_from: f64,
    t_to: f64,
    opts: &SweepOpts,
) -> Result<Record, LostTrack> {
    let cont = Continuer::new(&family.model, window, opts.census.refine);
    let min_step = (opts.max_step * 1e-4).max(opts.tol_event);
    match record {
        Record::Orbit(o) => cont
            .continue_to(&State::Orbit(o.clone()), t_from, t_to, opts.max_step, min_step)
            .map(|s| Record::Orbit(s.as_orbit().cloned().unwrap_or_else(|| o.clone()))),
        Record::Zero(z) => cont
            .continue_to(&State::Zero(z.clone()), t_from, t_to, opts.max_step, min_step)
            .map(|s| Record::Zero(s.as_zero().cloned().unwrap_or_else(|| z.clone()))),
        Record::Ghost(g) => {
            let lost = |t_good, t_lost, reason| LostTrack { t_good, t_lost, reason };
            let Model::Flow(field) = &family.model else {
                return Err(lost(t_from, t_from, LossReason::NoConvergence));
            };
            let mut zero = zero_record(field, &g.zero, t_from)
                .ok_or_else(|| lost(t_from, t_from, LossReason::NoConvergence))?;
            let mut lambda = g.eigenvalue;
            let mut t = t_from;
            let dir = (t_to - t_from).signum();
            while (t_to - t) * dir > 0.0 {
                let t_next = if (t_to - t).abs() <= opts.max_step { t_to } else { t + dir * opts.max_step };
                let s = cont.continue_to(&State::Zero(zero.clone()), t, t_next, opts.max_step, min_step)?;
                zero = s.as_zero().cloned().ok_or_else(|| lost(t, t_next, LossReason::NoConvergence))?;
                lambda = nearest_pair(&zero, lambda).ok_or_else(|| lost(t, t_next, LossReason::Jump))?;
                t = t_next;
            }
            ghost_record(&zero, lambda, g.degree, window, opts.census.tol_trace)
                .map(Record::Ghost)
                .ok_or_else(|| lost(t_to, t_to, LossReason::Collapsed))
        }
    }
}

/// The degree-`d` ghost record on the pair `lambda` of `zero`, if the pair
/// still has non-positive trace.
fn ghost_record(zero: &ZeroRec, lambda: Complex64, degree: u32, window: &Window, tol_trace: f64) -> Option<GhostOrbitRec> {
    let trace = 2.0 * lambda.re;
    if trace > tol_trace || lambda.im <= 0.0 {
        return None;
    }
    let plane = invariant_plane(&zero.jacobian, lambda)?;
    let plane = match &zero.tangent_basis {
        Some(q) => plane.map(|v| {
            let mut out = vec![0.0; q[0].len()];
            for (c, b) in v.iter().zip(q) {
                out.iter_mut().zip(b).for_each(|(o, bi)| *o += c * bi);
            }
            out
        }),
        None => plane,
    };
    Some(GhostOrbitRec {
        zero_id: 0,
        zero: zero.point.clone(),
        eigenvalue: lambda,
        plane_basis: plane,
        trace,
        degree,
        period: 2.0 * PI * degree as f64 / lambda.im,
        weight: weight_ghost(&zero.jacobian, degree).ok(),
        kind: if trace.abs() < tol_trace { GhostKind::Boundary } else { GhostKind::Ghost },
        margin: window.region.margin(&zero.point),
    })
}

/// Events of the sweep of `family` over `grid`.
pub fn detect_events(
    family: &FamilySpec,
    window: &Window,
    grid: &[f64],
    opts: &SweepOpts,
) -> Result<Vec<EventRecord>, SweepError> {
    audit_invariance(family, window, grid, opts).map(|r| r.events)
}

/// Sweeps `family` over `grid`, tracking every record found by the
/// checkpoint censuses and the branch-switch probes, and audits the
/// constancy of the window total.
pub fn audit_invariance(
    family: &FamilySpec,
    window: &Window,
    grid: &[f64],
    opts: &SweepOpts,
) -> Result<SweepReport, SweepError> {
    window.validate()?;
    family.model.validate().map_err(CensusError::from)?;
    if window.region.dim() != family.model.dim() {
        return Err(CensusError::DimensionMismatch {
            region: window.region.dim(),
            model: family.model.dim(),
        }
        .into());
    }
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SweepError::InvalidGrid);
    }
    let sweep = Sweep {
        model: &family.model,
        window,
        opts,
        grid,
        cont: Continuer::new(&family.model, window, opts.census.refine),
    };
    sweep.run()
}

fn flagged_points(grid: &[f64], degenerate: &[bool]) -> Vec<f64> {
    grid.iter().zip(degenerate).filter(|(_, &d)| d).map(|(&t, _)| t).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Indicator {
    DetShift(f64),
    OrbitMargin,
    PeriodCut(u32),
    ZeroDet,
    ZeroMargin,
    Trace,
    GhostPeriod(u32),
}

impl Indicator {
    fn kind(self) -> EventKind {
        match self {
            Indicator::DetShift(c) if c < 0.0 => EventKind::Fold,
            Indicator::DetShift(_) => EventKind::PeriodDoubling,
            Indicator::ZeroDet => EventKind::ZeroDegeneracy,
            Indicator::Trace => EventKind::GhostBoundary,
            _ => EventKind::WindowBoundary,
        }
    }
}

#[derive(Debug, Clone)]
struct Track {
    record: RecordKind,
    states: Vec<Option<State>>,
}

#[derive(Debug, Clone)]
struct RawEvent {
    t_star: f64,
    bracket: (f64, f64),
    kind: EventKind,
    track: usize,
    /// Detected by a sign change along the track rather than by its loss.
    crossing: bool,
    lambda: Option<Complex64>,
    near_boundary: bool,
    side: Option<Side>,
}

struct Sweep<'a> {
    model: &'a Model,
    window: &'a Window,
    opts: &'a SweepOpts,
    grid: &'a [f64],
    cont: Continuer<'a>,
}

enum Loss {
    Resumed(State),
    Lost { t_star: f64, bracket: (f64, f64), reason: LossReason, last: State },
}

impl<'a> Sweep<'a> {
    fn run(&self) -> Result<SweepReport, SweepError> {
        let n = self.grid.len();
        let c = self.opts.checkpoints.clamp(2, n);
        let mut idx: Vec<usize> = (0..c)
            .map(|i| ((i * (n - 1)) as f64 / (c - 1) as f64).round() as usize)
            .collect();
        idx.dedup();
        let censuses: Vec<Census> = idx
            .par_iter()
            .map(|&k| build_census(self.model, Some(self.grid[k]), self.window, &self.opts.seeds, &self.opts.census))
            .collect::<Result<_, _>>()?;

        let mut tracks: Vec<Track> = Vec::new();
        let mut raw: Vec<RawEvent> = Vec::new();
        let mut discovered = Vec::new();
        for (&k, census) in idx.iter().zip(&censuses) {
            let mut candidates: Vec<State> = census.zeros.iter().cloned().map(State::Zero).collect();
            let mut seen = std::collections::BTreeSet::new();
            for o in census.embedded() {
                if seen.insert(o.orbit_id) {
                    candidates.push(State::Orbit(Orbit {
                        base_point: o.base_point.clone(),
                        minimal_period: o.minimal_period,
                        samples: o.samples.clone(),
                        monodromy: o.monodromy.clone(),
                        holonomy: o.holonomy.clone(),
                        residual: 0.0,
                    }));
                }
            }
            let fresh = self.register(&mut tracks, &mut raw, k, candidates);
            discovered.push(fresh);
        }

        let slices: Vec<Census> = (0..n).map(|k| self.slice(&tracks, k)).collect();
        let totals: Vec<i64> = slices.iter().map(|c| c.total_weight).collect();

        for (k, slice) in slices.iter().enumerate() {
            for track_id in self.near_boundary(&tracks, slice, k) {
                raw.push(RawEvent {
                    t_star: self.grid[k],
                    bracket: (self.grid[k], self.grid[k]),
                    kind: EventKind::WindowBoundary,
                    track: track_id,
                    crossing: true,
                    lambda: None,
                    near_boundary: true,
                    side: None,
                });
            }
        }

        let events = self.merge(&tracks, raw, &totals);
        let degenerate: Vec<bool> = slices.iter().map(Self::degenerate).collect();
        let verdict = self.verdict(&totals, &degenerate, &events);
        let checkpoints = idx
            .iter()
            .zip(&censuses)
            .zip(discovered)
            .map(|((&k, census), fresh)| Checkpoint {
                index: k,
                t: self.grid[k],
                census_total: census.total_weight,
                tracked_total: totals[k],
                discovered: fresh,
                diagnostics: census.diagnostics.clone(),
            })
            .collect();
        let summaries = tracks
            .iter()
            .enumerate()
            .map(|(id, tr)| {
                let live: Vec<usize> = (0..n).filter(|&k| tr.states[k].is_some()).collect();
                TrackSummary {
                    id,
                    record: tr.record,
                    first_t: self.grid[live.first().copied().unwrap_or(0)],
                    last_t: self.grid[live.last().copied().unwrap_or(0)],
                }
            })
            .collect();
        Ok(SweepReport {
            grid: self.grid.to_vec(),
            censuses: slices,
            totals,
            events,
            checkpoints,
            tracks: summaries,
            verdict,
        })
    }

    /// Adds tracks for the candidates at grid index `k` that no existing
    /// track follows, then runs the branch-switch probes of the events they
    /// produce. Returns the number of new tracks started from `candidates`.
    fn register(&self, tracks: &mut Vec<Track>, raw: &mut Vec<RawEvent>, k: usize, candidates: Vec<State>) -> usize {
        let mut fresh: Vec<State> = Vec::new();
        for c in candidates {
            if !self.is_tracked(tracks, k, &c) && !fresh.iter().any(|f| self.same(k, f, &c)) {
                fresh.push(c);
            }
        }
        let count = fresh.len();
        let mut queue: Vec<(usize, State)> = fresh.into_iter().map(|s| (k, s)).collect();
        while !queue.is_empty() {
            let base = tracks.len();
            let built: Vec<(Track, Vec<RawEvent>)> = queue
                .par_iter()
                .enumerate()
                .map(|(i, (k, s))| self.build_track(base + i, *k, s.clone()))
                .collect();
            let mut probes = Vec::new();
            for (track, events) in built {
                tracks.push(track);
                for e in events {
                    if e.crossing && matches!(e.kind, EventKind::PeriodDoubling | EventKind::GhostBoundary) {
                        probes.push(raw.len());
                    }
                    raw.push(e);
                }
            }
            queue = Vec::new();
            for p in probes {
                let (found, side) = self.probe(tracks, &raw[p]);
                raw[p].side = side;
                for (k, s) in found {
                    if !self.is_tracked(tracks, k, &s) && !queue.iter().any(|(j, q)| *j == k && self.same(k, q, &s)) {
                        queue.push((k, s));
                    }
                }
            }
        }
        count
    }

    fn same(&self, k: usize, a: &State, b: &State) -> bool {
        let scale = 1.0 + self.window.region.bounding_radius();
        match (a, b) {
            (State::Orbit(x), State::Orbit(y)) => same_orbit(
                self.model,
                x,
                y,
                Some(self.grid[k]),
                1e-4,
                1e-5 * scale,
                &self.opts.census.refine.integrator,
            ),
            (State::Zero(x), State::Zero(y)) => inf_dist(&x.point, &y.point) < 1e-6 * scale,
            _ => false,
        }
    }

    fn is_tracked(&self, tracks: &[Track], k: usize, s: &State) -> bool {
        tracks
            .iter()
            .any(|t| t.states[k].as_ref().is_some_and(|q| self.same(k, q, s)))
    }

    fn build_track(&self, id: usize, k: usize, state: State) -> (Track, Vec<RawEvent>) {
        let record = match state {
            State::Orbit(_) => RecordKind::Orbit,
            State::Zero(_) => RecordKind::Zero,
        };
        let mut states: Vec<Option<State>> = vec![None; self.grid.len()];
        states[k] = Some(state);
        let mut events = Vec::new();
        self.walk(id, record, &mut states, k, 1, &mut events);
        self.walk(id, record, &mut states, k, -1, &mut events);
        for j in 0..self.grid.len() - 1 {
            if let (Some(a), Some(b)) = (&states[j], &states[j + 1]) {
                self.scan(id, (self.grid[j], a), (self.grid[j + 1], b), &mut events);
            }
        }
        (Track { record, states }, events)
    }

    fn walk(&self, id: usize, record: RecordKind, states: &mut [Option<State>], k: usize, dir: isize, events: &mut Vec<RawEvent>) {
        let n = self.grid.len() as isize;
        let mut j = k as isize;
        loop {
            let next = j + dir;
            if next < 0 || next >= n {
                return;
            }
            let (ju, nu) = (j as usize, next as usize);
            let cur = states[ju].clone().expect("walk starts from a known state");
            let back = j - dir;
            let prev2 = if back >= 0 && back < n {
                states[back as usize].as_ref().map(|s| (self.grid[back as usize], s))
            } else {
                None
            };
            let result = self.cont.step(prev2, (self.grid[ju], &cur), self.grid[nu]);
            let next_state = match result {
                Ok(s) => s,
                Err(_) => match self.locate_loss(&cur, self.grid[ju], self.grid[nu]) {
                    Loss::Resumed(s) => s,
                    Loss::Lost { t_star, bracket, reason, last } => {
                        if let Some(kind) = self.loss_kind(record, reason, &last, bracket.0) {
                            events.push(RawEvent {
                                t_star,
                                bracket: (bracket.0.min(bracket.1), bracket.0.max(bracket.1)),
                                kind,
                                track: id,
                                crossing: false,
                                lambda: None,
                                near_boundary: false,
                                side: None,
                            });
                        }
                        return;
                    }
                },
            };
            states[nu] = Some(next_state);
            j = next;
        }
    }

    /// Continues from the last good parameter towards a failed one with
    /// step halving, so that a step which only failed for being too long
    /// does not end the track. The track is lost once a step shorter than
    /// `tol_event` fails.
    fn locate_loss(&self, good: &State, ta: f64, tb: f64) -> Loss {
        let mut prev: Option<(f64, State)> = None;
        let mut a = (ta, good.clone());
        let mut h = 0.5 * (tb - ta);
        loop {
            let remaining = tb - a.0;
            if h.abs() >= remaining.abs() {
                h = remaining;
            }
            let next = if h == remaining { tb } else { a.0 + h };
            let p2 = prev.as_ref().map(|(t, s)| (*t, s));
            match self.cont.step(p2, (a.0, &a.1), next) {
                Ok(s) if next == tb => return Loss::Resumed(s),
                Ok(s) => {
                    prev = Some(std::mem::replace(&mut a, (next, s)));
                    h *= 2.0;
                }
                Err(reason) => {
                    if h.abs() <= self.opts.tol_event {
                        return Loss::Lost {
                            t_star: a.0 + 0.5 * h,
                            bracket: (a.0, next),
                            reason,
                            last: a.1,
                        };
                    }
                    h *= 0.5;
                }
            }
        }
    }

    fn loss_kind(&self, record: RecordKind, reason: LossReason, last: &State, t: f64) -> Option<EventKind> {
        match (record, last) {
            (RecordKind::Orbit, State::Orbit(o)) => {
                if !orbit_in_window(o, self.window) {
                    return None;
                }
                Some(match reason {
                    LossReason::Collapsed => EventKind::GhostBoundary,
                    LossReason::HalvedPeriod => EventKind::PeriodDoubling,
                    _ if self.shrinks_to_zero(o, t) => EventKind::GhostBoundary,
                    _ => EventKind::Fold,
                })
            }
            (_, State::Zero(z)) => self
                .window
                .region
                .contains(&z.point)
                .then_some(EventKind::ZeroDegeneracy),
            _ => None,
        }
    }

    /// Whether a lost orbit had shrunk around a zero of the field.
    fn shrinks_to_zero(&self, o: &Orbit, t: f64) -> bool {
        let Model::Flow(field) = self.model else {
            return false;
        };
        let n = o.base_point.len();
        let k = o.samples.len().max(1) as f64;
        let centroid: Vec<f64> = (0..n)
            .map(|i| o.samples.iter().map(|p| p[i]).sum::<f64>() / k)
            .collect();
        let size = o
            .samples
            .iter()
            .map(|p| inf_dist(p, &centroid))
            .fold(0.0, f64::max);
        if size > 1e-3 * self.window.region.bounding_radius() {
            return false;
        }
        crate::census::refine_zero(field, &centroid, t, self.cont.refine.box_radius)
            .is_some_and(|z| inf_dist(&z, &centroid) <= 2.0 * size + 1e-9)
    }

    fn relevant_orbit(&self, o: &Orbit) -> bool {
        orbit_in_window(o, self.window)
    }

    fn ghost_live(&self, z: &ZeroRec, lambda: Complex64) -> bool {
        self.window.region.contains(&z.point)
            && 2.0 * lambda.re <= self.opts.census.tol_trace
            && 2.0 * PI / lambda.im <= self.window.s_max
    }

    fn eval(&self, ind: Indicator, s: &State, lambda: &mut Complex64) -> f64 {
        match (ind, s) {
            (Indicator::DetShift(c), State::Orbit(o)) => det_shift(o, c),
            (Indicator::OrbitMargin, State::Orbit(o)) => orbit_margin(o, &self.window.region),
            (Indicator::PeriodCut(d), State::Orbit(o)) => self.window.s_max - d as f64 * o.minimal_period,
            (Indicator::ZeroDet, State::Zero(z)) => z.jacobian.det(),
            (Indicator::ZeroMargin, State::Zero(z)) => self.window.region.margin(&z.point),
            (Indicator::Trace | Indicator::GhostPeriod(_), State::Zero(z)) => {
                let Some(l) = nearest_pair(z, *lambda) else {
                    return f64::NAN;
                };
                *lambda = l;
                match ind {
                    Indicator::Trace => 2.0 * l.re,
                    Indicator::GhostPeriod(d) => self.window.s_max - 2.0 * PI * d as f64 / l.im,
                    _ => unreachable!(),
                }
            }
            _ => f64::NAN,
        }
    }

    /// Sign changes of the event indicators between two consecutive states.
    fn scan(&self, id: usize, a: (f64, &State), b: (f64, &State), events: &mut Vec<RawEvent>) {
        let mut checks: Vec<(Indicator, Complex64)> = Vec::new();
        let none = Complex64::new(0.0, 0.0);
        let degree_cap = self.window.degree_max.unwrap_or(u32::MAX).min(64);
        match (a.1, b.1) {
            (State::Orbit(oa), State::Orbit(ob)) => {
                let relevant = self.relevant_orbit(oa) || self.relevant_orbit(ob);
                if relevant {
                    checks.push((Indicator::DetShift(-1.0), none));
                    checks.push((Indicator::DetShift(1.0), none));
                }
                if oa.minimal_period.min(ob.minimal_period) <= self.window.s_max {
                    checks.push((Indicator::OrbitMargin, none));
                }
                let inside = |o: &Orbit| o.samples.iter().all(|p| self.window.region.contains(p));
                if inside(oa) || inside(ob) {
                    let s = oa.minimal_period.min(ob.minimal_period);
                    let top = ((self.window.s_max / s).floor() as u32 + 1).min(degree_cap);
                    for d in 1..=top {
                        checks.push((Indicator::PeriodCut(d), none));
                    }
                }
            }
            (State::Zero(za), State::Zero(zb)) => {
                let inside = self.window.region.contains(&za.point) || self.window.region.contains(&zb.point);
                if inside {
                    checks.push((Indicator::ZeroDet, none));
                }
                let mut any_ghost = false;
                for la in za.spectrum.upper_half_plane() {
                    let Some(lb) = nearest_pair(zb, la) else { continue };
                    let live = self.ghost_live(za, la) || self.ghost_live(zb, lb);
                    any_ghost |= live;
                    if inside && (2.0 * PI / la.im <= self.window.s_max || 2.0 * PI / lb.im <= self.window.s_max) {
                        checks.push((Indicator::Trace, la));
                    }
                    let stable = |z: &ZeroRec, l: Complex64| {
                        self.window.region.contains(&z.point) && 2.0 * l.re <= self.opts.census.tol_trace
                    };
                    if stable(za, la) || stable(zb, lb) {
                        let im = la.im.max(lb.im);
                        let top = ((self.window.s_max * im / (2.0 * PI)).floor() as u32 + 1).min(degree_cap);
                        for d in 1..=top {
                            checks.push((Indicator::GhostPeriod(d), la));
                        }
                    }
                }
                if any_ghost {
                    checks.push((Indicator::ZeroMargin, none));
                }
            }
            _ => {}
        }
        for (ind, lambda0) in checks {
            let mut la = lambda0;
            let fa = self.eval(ind, a.1, &mut la);
            let mut lb = lambda0;
            let mut fb = self.eval(ind, b.1, &mut lb);
            let mut tb = b.0;
            if fb == 0.0 {
                // the crossing sits on the grid point: look just past it
                tb = b.0 + 4.0 * self.opts.tol_event * (b.0 - a.0).signum();
                let Ok(past) = self.cont.step(None, (b.0, b.1), tb) else { continue };
                let mut lp = lb;
                fb = self.eval(ind, &past, &mut lp);
            }
            if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() || fa == 0.0 || fb == 0.0 {
                continue;
            }
            let (t_star, bracket, lambda) = self.locate_sign(ind, (a.0, a.1.clone()), tb, fa, lambda0);
            events.push(RawEvent {
                t_star,
                bracket,
                kind: ind.kind(),
                track: id,
                crossing: true,
                lambda: matches!(ind, Indicator::Trace).then_some(lambda),
                near_boundary: false,
                side: None,
            });
        }
    }

    fn locate_sign(&self, ind: Indicator, a: (f64, State), tb: f64, fa: f64, lambda0: Complex64) -> (f64, (f64, f64), Complex64) {
        let mut a = a;
        let mut b = tb;
        let mut lambda = lambda0;
        let mut probe = lambda0;
        self.eval(ind, &a.1, &mut probe);
        lambda = if probe.im > 0.0 { probe } else { lambda };
        while (b - a.0).abs() > self.opts.tol_event {
            let mid = 0.5 * (a.0 + b);
            match self.cont.step(None, (a.0, &a.1), mid) {
                Ok(s) => {
                    let mut l = lambda;
                    let fm = self.eval(ind, &s, &mut l);
                    if fm.is_finite() && fm.signum() == fa.signum() && fm != 0.0 {
                        a = (mid, s);
                        lambda = l;
                    } else {
                        b = mid;
                    }
                }
                Err(_) => b = mid,
            }
        }
        (0.5 * (a.0 + b), (a.0.min(b), a.0.max(b)), lambda)
    }

    /// Branch-switch probe at the grid points enclosing a period doubling or
    /// a ghost boundary. Returns the orbits found and the side they lie on.
    fn probe(&self, tracks: &[Track], e: &RawEvent) -> (Vec<(usize, State)>, Option<Side>) {
        let (lo, hi) = self.around(e.t_star);
        let track = &tracks[e.track];
        let radius = self.window.region.bounding_radius();
        let mut amplitudes = vec![1e-3];
        amplitudes.extend(self.opts.probe_fractions.iter().map(|f| f * radius));
        let mut found = Vec::new();
        let mut sides = [false, false];
        for (side, k) in [(0usize, lo), (1, hi)] {
            let Some(state) = &track.states[k] else { continue };
            let t = self.grid[k];
            let seed: Option<(Vec<f64>, f64, Vec<f64>)> = match (e.kind, state) {
                (EventKind::PeriodDoubling, State::Orbit(o)) => self
                    .flip_direction(o, t)
                    .map(|v| (o.base_point.clone(), 2.0 * o.minimal_period, v)),
                (EventKind::GhostBoundary, State::Zero(z)) => e
                    .lambda
                    .and_then(|l| nearest_pair(z, l))
                    .and_then(|l| ghost_record(z, l, 1, self.window, f64::INFINITY))
                    .map(|g| (z.point.clone(), g.period, g.plane_basis[0].clone())),
                _ => None,
            };
            let Some((center, period, dir)) = seed else { continue };
            let attempts: Vec<Vec<f64>> = amplitudes
                .iter()
                .flat_map(|&a| [a, -a])
                .map(|a| center.iter().zip(&dir).map(|(c, v)| c + a * v).collect())
                .collect();
            let results: Vec<Option<Orbit>> = attempts
                .par_iter()
                .map(|x| {
                    let mut x = x.clone();
                    if let Model::Flow(f) = self.model {
                        f.project(&mut x);
                    }
                    crate::census::refine_model(self.model, &x, period, Some(t), &self.cont.refine).ok()
                })
                .collect();
            for o in results.into_iter().flatten() {
                let expected = match e.kind {
                    EventKind::PeriodDoubling => (o.minimal_period - period).abs() < 1e-3 * period,
                    _ => (o.minimal_period - period).abs() < 0.5 * period,
                };
                if !expected {
                    continue;
                }
                sides[side] = true;
                let s = State::Orbit(o);
                if !found.iter().any(|(kk, q)| *kk == k && self.same(k, q, &s)) {
                    found.push((k, s));
                }
            }
        }
        let side = match sides {
            [true, true] => Some(Side::Both),
            [true, false] => Some(Side::Before),
            [false, true] => Some(Side::After),
            _ => None,
        };
        (found, side)
    }

    /// Ambient direction of the holonomy eigenvector nearest to `-1`.
    fn flip_direction(&self, o: &Orbit, t: f64) -> Option<Vec<f64>> {
        let sp = linalg::eigenvalues(&o.holonomy).ok()?;
        let lambda = sp
            .real_eigenvalues()
            .into_iter()
            .min_by(|a, b| (a + 1.0).abs().partial_cmp(&(b + 1.0).abs()).unwrap())?;
        let k = o.holonomy.dim();
        let shift = lambda + 1e-8 * (1.0 + lambda.abs());
        let lu = Lu::factor(&o.holonomy.shift(-shift));
        if lu.is_singular() {
            return None;
        }
        let mut v: Vec<f64> = (0..k).map(|i| 1.0 + 0.1 * i as f64).collect();
        for _ in 0..3 {
            v = lu.solve(&v);
            let nv = linalg::norm(&v);
            if !(nv.is_finite() && nv > 0.0) {
                return None;
            }
            v.iter_mut().for_each(|x| *x /= nv);
        }
        match self.model {
            Model::Cylinder(_) => Some(v),
            Model::Flow(f) => {
                let y = f.value(&o.base_point, t);
                let mut span = vec![y];
                if f.sphere_radius().is_some() {
                    span.push(o.base_point.clone());
                }
                let q = linalg::orthonormal_complement(o.base_point.len(), &span);
                let mut out = vec![0.0; o.base_point.len()];
                for (c, b) in v.iter().zip(&q) {
                    out.iter_mut().zip(b).for_each(|(x, bi)| *x += c * bi);
                }
                Some(out)
            }
        }
    }

    /// Grid indices enclosing `t`, skipping a grid point that sits on it.
    fn around(&self, t: f64) -> (usize, usize) {
        let n = self.grid.len();
        let gap = 10.0 * self.opts.tol_event;
        let lo = self.grid.iter().rposition(|&g| g < t - gap).unwrap_or(0);
        let hi = self.grid.iter().position(|&g| g > t + gap).unwrap_or(n - 1);
        (lo.min(n - 2), hi.max(lo.min(n - 2) + 1))
    }

    /// A slice whose weights are undefined: non-rigid orbits or ghosts on the boundary.
    fn degenerate(slice: &Census) -> bool {
        slice.diagnostics.unweighted_orbits > 0
            || slice.diagnostics.ghost_rigidity_failures > 0
            || slice.ghosts.iter().any(|g| g.kind == GhostKind::Boundary)
    }

    /// Census at grid index `k` assembled from the tracked records.
    fn slice(&self, tracks: &[Track], k: usize) -> Census {
        let t = self.grid[k];
        let mut zeros: Vec<ZeroRec> = Vec::new();
        let mut orbits: Vec<(usize, Orbit)> = Vec::new();
        for (id, tr) in tracks.iter().enumerate() {
            match &tr.states[k] {
                Some(State::Zero(z)) if self.window.region.contains(&z.point) => {
                    if !zeros.iter().any(|q| inf_dist(&q.point, &z.point) < 1e-6 * (1.0 + self.window.region.bounding_radius())) {
                        zeros.push(z.clone());
                    }
                }
                Some(State::Orbit(o)) if orbit_in_window(o, self.window) => {
                    let s = State::Orbit(o.clone());
                    if !orbits.iter().any(|(_, q)| self.same(k, &State::Orbit(q.clone()), &s)) {
                        orbits.push((id, o.clone()));
                    }
                }
                _ => {}
            }
        }
        zeros.sort_by(|a, b| a.point.partial_cmp(&b.point).unwrap());
        let (ghosts, rigidity_failures) = enumerate_ghosts(&zeros, self.window, self.opts.census.tol_trace);
        let mut records = Vec::new();
        for (id, o) in &orbits {
            records.extend(orbit_records(*id, o, self.window, self.opts.census.rigidity));
        }
        let diag = Diagnostics {
            ghost_rigidity_failures: rigidity_failures,
            unweighted_orbits: records.iter().filter(|r| r.class.is_none()).count(),
            ..Diagnostics::default()
        };
        assemble(Some(t), self.window.clone(), zeros, ghosts, records, diag, matches!(self.model, Model::Cylinder(_)))
    }

    /// Tracks whose records sit within `tol_margin` of the window boundary at `k`.
    fn near_boundary(&self, tracks: &[Track], slice: &Census, k: usize) -> Vec<usize> {
        let tol = self.opts.tol_margin;
        let mut out = Vec::new();
        for o in &slice.orbits {
            if (o.margin < tol || (self.window.s_max - o.total_period).abs() < tol) && !out.contains(&o.orbit_id) {
                out.push(o.orbit_id);
            }
        }
        for g in &slice.ghosts {
            if g.margin < tol || (self.window.s_max - g.period).abs() < tol {
                let id = tracks.iter().position(|tr| {
                    tr.states[k]
                        .as_ref()
                        .and_then(State::as_zero)
                        .is_some_and(|z| inf_dist(&z.point, &g.zero) < 1e-9)
                });
                if let Some(id) = id {
                    if !out.contains(&id) {
                        out.push(id);
                    }
                }
            }
        }
        out
    }

    fn carrier(&self, tracks: &[Track], id: usize, (lo, hi): (usize, usize)) -> Carrier {
        let tr = &tracks[id];
        let signs = |k: usize| -> Option<(i8, i8)> {
            let o = tr.states[k].as_ref()?.as_orbit()?;
            let r = self.opts.census.rigidity;
            Some((epsilon(&o.holonomy, 1, r).ok()?, epsilon(&o.holonomy, 2, r).ok()?))
        };
        let period = tr.states[lo]
            .as_ref()
            .or(tr.states[hi].as_ref())
            .and_then(State::as_orbit)
            .map(|o| o.minimal_period);
        Carrier {
            track: id,
            record: tr.record,
            signs_before: signs(lo),
            signs_after: signs(hi),
            period,
        }
    }

    fn merge(&self, tracks: &[Track], mut raw: Vec<RawEvent>, totals: &[i64]) -> Vec<EventRecord> {
        raw.sort_by(|a, b| {
            a.t_star
                .partial_cmp(&b.t_star)
                .unwrap()
                .then(a.track.cmp(&b.track))
                .then(a.kind.cmp(&b.kind))
        });
        let spacing = self
            .grid
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        let merge_tol = 0.5 * spacing;
        let mut groups: Vec<Vec<RawEvent>> = Vec::new();
        for e in raw {
            let slot = groups.iter().position(|g| {
                let lead = &g[0];
                if lead.kind != e.kind || (lead.t_star - e.t_star).abs() > merge_tol {
                    return false;
                }
                if g.iter().any(|x| x.track == e.track) {
                    // the same crossing seen twice
                    return g.iter().any(|x| x.track == e.track && (x.t_star - e.t_star).abs() <= 10.0 * self.opts.tol_event);
                }
                match e.kind {
                    EventKind::WindowBoundary => false,
                    EventKind::GhostBoundary | EventKind::PeriodDoubling => {
                        !(e.crossing && g.iter().any(|x| x.crossing))
                    }
                    EventKind::Fold | EventKind::ZeroDegeneracy => g.len() < 2,
                }
            });
            match slot {
                Some(i) => {
                    let new_track = !groups[i].iter().any(|x| x.track == e.track);
                    let adds_side = e.side.is_some() && groups[i].iter().all(|x| x.side.is_none());
                    if new_track || adds_side {
                        groups[i].push(e);
                    }
                }
                None => groups.push(vec![e]),
            }
        }
        let mut events: Vec<EventRecord> = groups
            .into_iter()
            .map(|g| {
                let lead = g.iter().find(|x| x.crossing && !x.near_boundary).unwrap_or(&g[0]);
                let (lo, hi) = self.around(lead.t_star);
                let on_grid = lead.near_boundary;
                let (before, after) = if on_grid {
                    let k = self.grid.iter().position(|&x| x == lead.t_star).unwrap_or(lo);
                    (totals[k], totals[k])
                } else {
                    (totals[lo], totals[hi])
                };
                let mut ids: Vec<usize> = Vec::new();
                for x in &g {
                    if !ids.contains(&x.track) {
                        ids.push(x.track);
                    }
                }
                // the record carrying the crossing goes first
                ids.sort_by_key(|&id| (id != lead.track, id));
                EventRecord {
                    t_star: lead.t_star,
                    bracket: lead.bracket,
                    kind: lead.kind,
                    carriers: ids.iter().map(|&id| self.carrier(tracks, id, (lo, hi))).collect(),
                    weight_before: before,
                    weight_after: after,
                    branch_side: g.iter().find_map(|x| x.side),
                    near_boundary: on_grid,
                }
            })
            .collect();
        events.sort_by(|a, b| {
            a.t_star
                .partial_cmp(&b.t_star)
                .unwrap()
                .then(a.carriers[0].track.cmp(&b.carriers[0].track))
        });
        events
    }

    fn verdict(&self, totals: &[i64], degenerate: &[bool], events: &[EventRecord]) -> Verdict {
        let regular: Vec<usize> = (0..totals.len()).filter(|&k| !degenerate[k]).collect();
        let violations: Vec<(usize, usize)> = regular
            .windows(2)
            .filter(|w| totals[w[0]] != totals[w[1]])
            .map(|w| (w[0], w[1]))
            .collect();
        let explained = violations.iter().all(|&(i, j)| {
            events.iter().any(|e| {
                e.kind == EventKind::WindowBoundary && e.t_star >= self.grid[i] && e.t_star <= self.grid[j]
            })
        });
        let event_mismatches = events
            .iter()
            .enumerate()
            .filter(|(_, e)| e.kind != EventKind::WindowBoundary && e.weight_before != e.weight_after)
            .map(|(i, _)| i)
            .collect();
        let mut unresolved = Vec::new();
        for w in events.windows(2) {
            if w[0].kind != w[1].kind && (w[1].t_star - w[0].t_star).abs() < self.opts.tol_event && !w[0].near_boundary && !w[1].near_boundary {
                unresolved.push(w[0].t_star);
            }
        }
        Verdict {
            pass: violations.is_empty(),
            first_violation: violations.first().map(|&(i, j)| (self.grid[i], self.grid[j])),
            explained_by_window: explained,
            event_mismatches,
            unresolved,
            degenerate_points: flagged_points(self.grid, degenerate),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::census::Region;
    use crate::flow::{CylinderMap, FieldSpec};

    fn planar(field: FieldSpec) -> FamilySpec {
        FamilySpec {
            model: Model::Flow(field),
            range: (-1.0, 1.0),
        }
    }

    #[test]
    fn ghost_persists_under_continuation() {
        let fam = planar(FieldSpec::planar_minus());
        let window = Window::new(Region::ball(2, 1.5), 7.0);
        let Model::Flow(f) = &fam.model else { unreachable!() };
        let z = zero_record(f, &[0.0, 0.0], 0.2).unwrap();
        let g = ghost_record(&z, z.spectrum.upper_half_plane()[0], 1, &window, 1e-8).unwrap();
        assert_eq!(g.weight, Some(-1));
        let out = continue_record(&fam, &window, &Record::Ghost(g), 0.2, 0.8, &SweepOpts::default()).unwrap();
        let Record::Ghost(g) = out else { panic!() };
        assert_eq!(g.weight, Some(-1));
        assert!((g.trace + 1.6).abs() < 1e-10);
    }

    #[test]
    fn shrinking_orbit_is_lost_near_zero() {
        let fam = planar(FieldSpec::planar_minus());
        let window = Window::new(Region::ball(2, 1.5), 7.0);
        let Model::Flow(f) = &fam.model else { unreachable!() };
        let o = crate::census::refine_orbit(f, &[0.4, 0.0], 6.3, Some(-0.2), &Default::default()).unwrap();
        let err = continue_record(&fam, &window, &Record::Orbit(o), -0.2, 0.2, &SweepOpts::default()).unwrap_err();
        assert!(err.t_good < 0.0 && err.t_lost > -1e-3 && err.t_lost < 0.05, "{err:?}");
    }

    #[test]
    fn long_step_from_a_small_orbit_is_resumed() {
        let fam = planar(FieldSpec::planar_minus());
        let window = Window::new(Region::ball(2, 1.5), 7.0);
        let Model::Flow(f) = &fam.model else { unreachable!() };
        let o = crate::census::refine_orbit(f, &[0.07, 0.0], 6.3, Some(-0.005), &Default::default()).unwrap();
        let opts = SweepOpts::default();
        let grid = [-1.0, -0.005];
        let sweep = Sweep {
            model: &fam.model,
            window: &window,
            opts: &opts,
            grid: &grid,
            cont: Continuer::new(&fam.model, &window, opts.census.refine),
        };
        let Loss::Resumed(State::Orbit(far)) = sweep.locate_loss(&State::Orbit(o), -0.005, -1.0) else {
            panic!("track lost");
        };
        assert!((linalg::norm(&far.base_point) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn embedded_map_orbit_tracked_across_range() {
        let fam = FamilySpec {
            model: Model::Cylinder(CylinderMap::period_doubling()),
            range: (-1.0, 1.0),
        };
        let window = Window::new(Region::cube(2, 20.0), 2.5);
        let o = crate::census::refine_periodic_point(&CylinderMap::period_doubling(), &[0.1, 0.1], 1, -1.0, &Default::default())
            .unwrap();
        let opts = SweepOpts::default();
        let mut t = -1.0;
        let mut rec = Record::Orbit(o);
        while t < 1.0 {
            rec = continue_record(&fam, &window, &rec, t, t + 0.25, &opts).unwrap();
            t += 0.25;
            let Record::Orbit(o) = &rec else { panic!() };
            assert_eq!(epsilon(&o.holonomy, 1, Default::default()).unwrap(), 1);
        }
    }

    #[test]
    fn uniform_grid_has_endpoints() {
        let g = uniform_grid((-1.0, 1.0), 64);
        assert_eq!(g.len(), 64);
        assert_eq!(g[0], -1.0);
        assert_eq!(g[63], 1.0);
        assert!(!g.contains(&0.0));
    }
}
