//! Command-line runner: scenario files in, JSON and CSV reports out.

pub mod report;
pub mod run;
pub mod scenario;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use run::{run_census, run_lefschetz, run_sweep, Outcome, RunConfig, Status};
pub use scenario::{load, parse, ConfigError, Overrides, Scenario};

#[derive(Debug, Parser)]
#[command(name = "ghostorbit", version, about = "Periodic and ghost orbit censuses, homotopy sweeps and Lefschetz tables")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Census of periodic and ghost orbits at one parameter value.
    Census(Common),
    /// Continuation sweep with an invariance verdict.
    Sweep(Common),
    /// Lefschetz numbers, orbit weights and the brute-force oracle.
    Lefschetz(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file.
    pub file: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Leave out timestamps and timings.
    #[arg(long)]
    pub no_meta: bool,
    /// Degree cutoff, overriding the scenario's window and table order.
    #[arg(long)]
    pub degree_max: Option<u32>,
    /// Output directory, overriding the scenario's.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs one command and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    match try_execute(cli) {
        Ok(status) => status.code(),
        Err(e) => {
            eprintln!("error: {e:#}");
            Status::Error.code()
        }
    }
}

fn try_execute(cli: Cli) -> anyhow::Result<Status> {
    let (Command::Census(c) | Command::Sweep(c) | Command::Lefschetz(c)) = &cli.command;
    let scenario = load(&c.file, Overrides { degree_max: c.degree_max })?;
    let config = RunConfig {
        jobs: c.jobs,
        no_meta: c.no_meta,
        out_dir: c.out.clone(),
    };
    let dir = run::output_dir(&scenario, &config);
    let (status, paths) = match cli.command {
        Command::Census(_) => {
            let o = run_census(&scenario, &config)?;
            let c = &o.result;
            println!(
                "{}: total weight {} ({} orbit records, {} ghosts)",
                scenario.name,
                c.total_weight,
                c.orbits.len(),
                c.ghosts.len()
            );
            if c.diagnostics.incomplete {
                eprintln!(
                    "warning: incomplete census, {} of {} seeds failed",
                    c.diagnostics.newton_failures, c.diagnostics.seeds_total
                );
            }
            (o.status, o.write(&dir)?)
        }
        Command::Sweep(_) => {
            let o = run_sweep(&scenario, &config)?;
            let r = &o.result;
            println!(
                "{}: {} events, verdict {}",
                scenario.name,
                r.events.len(),
                if r.verdict.pass { "pass" } else { "fail" }
            );
            for e in &r.events {
                println!("  {:?} at t = {:.9} ({} -> {})", e.kind, e.t_star, e.weight_before, e.weight_after);
            }
            (o.status, o.write(&dir)?)
        }
        Command::Lefschetz(_) => {
            let o = run_lefschetz(&scenario, &config)?;
            let t = &o.result;
            let w: Vec<String> = t.weights.values().map(ToString::to_string).collect();
            println!("{}: weights [{}]", scenario.name, w.join(", "));
            if let Some(agrees) = t.oracle_agrees {
                println!("  oracle agreement: {agrees}");
            }
            (o.status, o.write(&dir)?)
        }
    };
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(status)
}
