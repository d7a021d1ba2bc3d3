//! Orchestration of the three commands and their exit statuses.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context, Result};
use ghostorbit::census::{build_census, Census};
use ghostorbit::homotopy::{audit_invariance, SweepReport};
use ghostorbit::lefschetz::{brute_force_orbit_count, lefschetz_number, moebius_weights, pi_series, OrbitCount};
use num_bigint::BigInt;
use std::collections::BTreeMap;

use crate::report::{
    int_map, sweep_csv, CensusDocument, CensusSummary, Int, LefschetzDocument, Meta, OracleSection, SweepDocument,
};
use crate::scenario::Scenario;

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    Error = 1,
    /// The census gave up on too many seeds.
    Incomplete = 2,
    /// The sweep's invariance verdict failed, or the Lefschetz oracle disagreed.
    Fail = 3,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Settings shared by all commands.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub jobs: Option<usize>,
    pub no_meta: bool,
    pub out_dir: Option<PathBuf>,
}

/// A finished run: documents in memory, with their file names.
#[derive(Debug, Clone)]
pub struct Outcome<T> {
    pub status: Status,
    pub result: T,
    pub files: Vec<(String, String)>,
}

impl<T> Outcome<T> {
    /// Writes the documents into `dir` and returns their paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        self.files
            .iter()
            .map(|(name, body)| {
                let path = dir.join(name);
                std::fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
                Ok(path)
            })
            .collect()
    }
}

/// Output directory: the command line wins over the scenario file, which
/// wins over the working directory.
pub fn output_dir(scenario: &Scenario, config: &RunConfig) -> PathBuf {
    config
        .out_dir
        .clone()
        .or_else(|| scenario.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<(T, usize)> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().context("cannot start worker pool")?;
    let n = pool.current_num_threads();
    Ok((pool.install(f), n))
}

fn meta(config: &RunConfig, started: Instant, jobs: usize) -> Option<Meta> {
    if config.no_meta {
        return None;
    }
    Some(Meta {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        generated_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        elapsed_seconds: started.elapsed().as_secs_f64(),
        jobs,
    })
}

fn json<T: serde::Serialize>(doc: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(doc)?;
    s.push('\n');
    Ok(s)
}

pub fn run_census(scenario: &Scenario, config: &RunConfig) -> Result<Outcome<Census>> {
    let started = Instant::now();
    let model = scenario.model.as_ref().ok_or_else(|| anyhow!("the census needs a [model] table"))?;
    let window = scenario.window.as_ref().expect("validated with the model");
    let (census, jobs) = with_pool(config.jobs, || {
        build_census(&model.model, scenario.t, window, &scenario.options.seeds, &scenario.options.census)
    })?;
    let census = census?;
    let doc = CensusDocument {
        kind: "census",
        meta: meta(config, started, jobs),
        config: scenario,
        summary: CensusSummary::of(&census),
        census: &census,
    };
    let files = vec![(format!("{}.census.json", scenario.name), json(&doc)?)];
    let status = if census.diagnostics.incomplete {
        Status::Incomplete
    } else {
        Status::Ok
    };
    Ok(Outcome {
        status,
        result: census,
        files,
    })
}

pub fn run_sweep(scenario: &Scenario, config: &RunConfig) -> Result<Outcome<SweepReport>> {
    let started = Instant::now();
    let family = scenario.family().ok_or_else(|| anyhow!("the sweep needs [model] and [sweep] tables"))?;
    let window = scenario.window.as_ref().expect("validated with the model");
    let grid = &scenario.sweep.as_ref().expect("family implies a sweep").grid;
    let (report, jobs) = with_pool(config.jobs, || audit_invariance(&family, window, grid, &scenario.options))?;
    let report = report?;
    let doc = SweepDocument::new(scenario, &report, meta(config, started, jobs));
    let files = vec![
        (format!("{}.sweep.json", scenario.name), json(&doc)?),
        (format!("{}.sweep.csv", scenario.name), sweep_csv(&report)?),
    ];
    let incomplete = report.checkpoints.iter().any(|c| c.diagnostics.incomplete);
    let status = if !report.verdict.pass {
        Status::Fail
    } else if incomplete {
        Status::Incomplete
    } else {
        Status::Ok
    };
    Ok(Outcome {
        status,
        result: report,
        files,
    })
}

/// Exact tables of a Lefschetz run.
#[derive(Debug, Clone, PartialEq)]
pub struct LefschetzTables {
    pub lefschetz_numbers: BTreeMap<u32, BigInt>,
    pub weights: BTreeMap<u32, BigInt>,
    pub pi_series: Vec<BigInt>,
    pub oracle: Option<OrbitCount>,
    pub oracle_agrees: Option<bool>,
}

pub fn run_lefschetz(scenario: &Scenario, config: &RunConfig) -> Result<Outcome<LefschetzTables>> {
    let started = Instant::now();
    let plan = scenario.lefschetz.as_ref().ok_or_else(|| anyhow!("the run needs a [lefschetz] table"))?;
    let (tables, jobs) = with_pool(config.jobs, || -> Result<LefschetzTables> {
        let h = &plan.homology;
        // weights first: inconsistent data then reports the first non-integral weight
        let weights = moebius_weights(h, plan.d_max)?;
        let lefschetz_numbers = (1..=plan.d_max)
            .map(|n| Ok((n, lefschetz_number(h, n)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let pi_series = pi_series(h, plan.d_max)?;
        let oracle = plan
            .oracle
            .as_ref()
            .map(|m| brute_force_orbit_count(m, plan.d_max))
            .transpose()?;
        let oracle_agrees = oracle.as_ref().map(|o| o.weights == weights);
        Ok(LefschetzTables {
            lefschetz_numbers,
            weights,
            pi_series,
            oracle,
            oracle_agrees,
        })
    })?;
    let tables = tables?;
    let doc = LefschetzDocument {
        kind: "lefschetz",
        meta: meta(config, started, jobs),
        config: scenario,
        lefschetz_numbers: int_map(&tables.lefschetz_numbers),
        weights: int_map(&tables.weights),
        pi_series: tables.pi_series.iter().map(Int::from).collect(),
        oracle: tables.oracle.as_ref().map(|o| OracleSection {
            weights: int_map(&o.weights),
            points: o.points.clone(),
            agrees: tables.oracle_agrees == Some(true),
        }),
    };
    let files = vec![(format!("{}.lefschetz.json", scenario.name), json(&doc)?)];
    let status = if tables.oracle_agrees == Some(false) {
        Status::Fail
    } else {
        Status::Ok
    };
    Ok(Outcome {
        status,
        result: tables,
        files,
    })
}
