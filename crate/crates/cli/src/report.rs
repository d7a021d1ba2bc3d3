//! Report documents written as JSON and CSV.

use std::collections::BTreeMap;

use ghostorbit::census::Census;
use ghostorbit::homotopy::{Checkpoint, EventRecord, SweepReport, TrackSummary, Verdict};
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::scenario::Scenario;

/// Run metadata; left out with `--no-meta` so reports are reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub generated_unix: u64,
    pub elapsed_seconds: f64,
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusSummary {
    pub t: Option<f64>,
    pub total_weight: i64,
    pub weight_by_degree: BTreeMap<u32, i64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub weight_by_period: BTreeMap<u32, i64>,
    pub n_orbits: usize,
    pub n_embedded: usize,
    pub n_ghosts: usize,
    pub n_zeros: usize,
    pub incomplete: bool,
}

impl CensusSummary {
    pub fn of(c: &Census) -> CensusSummary {
        CensusSummary {
            t: c.t,
            total_weight: c.total_weight,
            weight_by_degree: c.weight_by_degree.clone(),
            weight_by_period: c.weight_by_period.clone(),
            n_orbits: c.orbits.len(),
            n_embedded: c.embedded().count(),
            n_ghosts: c.ghosts.len(),
            n_zeros: c.zeros.len(),
            incomplete: c.diagnostics.incomplete,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusDocument<'a> {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
    pub config: &'a Scenario,
    pub summary: CensusSummary,
    pub census: &'a Census,
}

/// One orbit record of a sweep slice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceOrbit {
    pub orbit_id: usize,
    pub degree: u32,
    pub minimal_period: f64,
    pub total_period: f64,
    pub base_point: Vec<f64>,
    pub signs: Option<(i8, i8)>,
    pub weight: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceGhost {
    pub point: Vec<f64>,
    pub degree: u32,
    pub period: f64,
    pub trace: f64,
    pub weight: Option<i32>,
}

/// Census at one grid point, reduced to what a sweep table needs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Slice {
    pub t: f64,
    pub total_weight: i64,
    /// Per period for mapping cylinders, per degree for flows.
    pub weights: BTreeMap<u32, i64>,
    pub orbits: Vec<SliceOrbit>,
    pub ghosts: Vec<SliceGhost>,
    pub degenerate: bool,
}

impl Slice {
    pub fn of(t: f64, c: &Census, degenerate: bool) -> Slice {
        Slice {
            t,
            total_weight: c.total_weight,
            weights: c.slice_weights().clone(),
            orbits: c
                .orbits
                .iter()
                .map(|o| SliceOrbit {
                    orbit_id: o.orbit_id,
                    degree: o.degree,
                    minimal_period: o.minimal_period,
                    total_period: o.total_period,
                    base_point: o.base_point.clone(),
                    signs: o.class.map(|k| (k.epsilon1, k.epsilon2)),
                    weight: o.weight(),
                })
                .collect(),
            ghosts: c
                .ghosts
                .iter()
                .map(|g| SliceGhost {
                    point: g.zero.clone(),
                    degree: g.degree,
                    period: g.period,
                    trace: g.trace,
                    weight: g.weight,
                })
                .collect(),
            degenerate,
        }
    }

    pub fn weight(&self, d: u32) -> i64 {
        self.weights.get(&d).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepDocument<'a> {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
    pub config: &'a Scenario,
    pub verdict: &'a Verdict,
    pub events: &'a [EventRecord],
    pub slices: Vec<Slice>,
    pub checkpoints: &'a [Checkpoint],
    pub tracks: &'a [TrackSummary],
}

impl<'a> SweepDocument<'a> {
    pub fn new(config: &'a Scenario, report: &'a SweepReport, meta: Option<Meta>) -> SweepDocument<'a> {
        let degenerate = &report.verdict.degenerate_points;
        SweepDocument {
            kind: "sweep",
            meta,
            config,
            verdict: &report.verdict,
            events: &report.events,
            slices: report
                .grid
                .iter()
                .zip(&report.censuses)
                .map(|(&t, c)| Slice::of(t, c, degenerate.contains(&t)))
                .collect(),
            checkpoints: &report.checkpoints,
            tracks: &report.tracks,
        }
    }
}

/// CSV table of a sweep, one row per grid point.
pub fn sweep_csv(report: &SweepReport) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "total_weight", "weight_d1", "weight_d2", "n_orbits", "n_ghosts"])?;
    for (t, c) in report.grid.iter().zip(&report.censuses) {
        let s = c.slice_weights();
        let d = |k: u32| s.get(&k).copied().unwrap_or(0);
        w.serialize((t, c.total_weight, d(1), d(2), c.orbits.len(), c.ghosts.len()))?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// An integer that prints as a JSON number when it fits in `i64`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Int {
    Small(i64),
    Big(String),
}

impl From<&BigInt> for Int {
    fn from(v: &BigInt) -> Int {
        v.to_i64().map_or_else(|| Int::Big(v.to_string()), Int::Small)
    }
}

pub fn int_map(m: &BTreeMap<u32, BigInt>) -> BTreeMap<u32, Int> {
    m.iter().map(|(k, v)| (*k, Int::from(v))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSection {
    pub weights: BTreeMap<u32, Int>,
    /// Points of minimal period `d`.
    pub points: BTreeMap<u32, u64>,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LefschetzDocument<'a> {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
    pub config: &'a Scenario,
    /// `L(f^n)` for `n = 1..=d_max`.
    pub lefschetz_numbers: BTreeMap<u32, Int>,
    pub weights: BTreeMap<u32, Int>,
    /// Coefficients of the orbit series, lowest order first.
    pub pi_series: Vec<Int>,
    pub oracle: Option<OracleSection>,
}
