//! The `draco` command line: `run`, `sweep`, `validate` and `trace`.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 when a
//! run breaks an internal invariant (the failing seed is printed).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{parse_sections, SimConfig};
use crate::engine::Simulation;
use crate::error::{Error, Result};
use crate::experiments::{builtin_scenario, builtin_scenarios, run_point, run_scenario, write_files, Scenario, SweepResults};
use crate::validate::{run_suite, Level};

#[derive(Debug, Parser)]
#[command(
    name = "draco",
    version,
    about = "Hop-by-hop data replication and mobile-sink collection simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write its metrics.
    Run {
        /// Config file, or `default`.
        #[arg(long, default_value = "default")]
        config: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
        /// Also write the event trace.
        #[arg(long)]
        verbose: bool,
    },
    /// Run a built-in scenario or a scenario file.
    Sweep {
        /// Preset name or path to a scenario file.
        scenario: String,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; 0 means one per core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long)]
        force: bool,
        #[arg(long)]
        verbose: bool,
    },
    /// Run the invariant suite on small worlds.
    Validate {
        #[arg(value_parser = ["quick", "full"], default_value = "quick")]
        level: String,
    },
    /// Write the event trace of one run.
    Trace {
        #[arg(long, default_value = "default")]
        config: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
}

/// Parses `args` (program name first) and runs the command, writing to the
/// given streams. Returns the process exit code.
pub fn run_with(args: impl IntoIterator<Item = OsString>, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e @ Error::Invariant { seed, .. }) => {
            let _ = writeln!(err, "error: {e}\nfailing seed: {seed}");
            2
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

pub fn main() -> i32 {
    run_with(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr())
}

fn load_config(spec: &str) -> Result<SimConfig> {
    if spec == "default" {
        return Ok(SimConfig::default());
    }
    SimConfig::from_text(&fs::read_to_string(spec)?)
}

fn load_scenario(spec: &str) -> Result<Scenario> {
    if let Some(s) = builtin_scenario(spec) {
        return Ok(s);
    }
    if Path::new(spec).is_file() {
        return Scenario::from_text(&fs::read_to_string(spec)?);
    }
    let names: Vec<String> = builtin_scenarios().into_iter().map(|s| s.name).collect();
    Err(Error::UnknownScenario(format!(
        "{spec}` (presets: {}; or a scenario file path)",
        names.join(", ")
    )))
}

/// A one-point scenario describing `cfg`, so single runs share the sweep
/// CSV writer and provenance header.
fn scenario_for(cfg: &SimConfig) -> Result<Scenario> {
    let mut sc = Scenario::from_text("")?;
    sc.name = "run".into();
    sc.node_counts = vec![cfg.node_count];
    sc.replication_strategies = vec![cfg.replication_strategy];
    sc.replication_degrees = vec![cfg.replication_degree];
    sc.failure_fractions = vec![cfg.failure_fraction];
    sc.collection_strategies = cfg.collection_strategy.into_iter().collect();
    sc.repetitions = 1;
    for e in parse_sections(&cfg.to_text())? {
        let listed = matches!(
            (e.section.as_str(), e.key.as_str()),
            ("nodes", "count")
                | ("replication", "strategy")
                | ("replication", "degree")
                | ("failure", "fraction")
                | ("collection", "strategy")
        );
        if !listed {
            sc.overrides.insert((e.section, e.key), e.value);
        }
    }
    Ok(sc)
}

fn trace_text(cfg: &SimConfig, seed: u64) -> Result<String> {
    let mut sim = Simulation::new(cfg.clone(), seed)?;
    sim.enable_trace();
    let rec = sim.run_until_done()?;
    let mut s = format!(
        "# draco-sim {} config_hash={:016x} seed={seed}\ntime,seq,kind,actor,peer\n",
        env!("CARGO_PKG_VERSION"),
        cfg.hash()
    );
    for e in rec.event_trace.unwrap_or_default() {
        s.push_str(&e.to_line());
        s.push('\n');
    }
    Ok(s)
}

fn execute(cmd: Command, out: &mut dyn std::io::Write) -> Result<i32> {
    match cmd {
        Command::Run {
            config,
            seed,
            out: dir,
            force,
            verbose,
        } => {
            let cfg = load_config(&config)?;
            let sinks: Vec<_> = cfg.collection_strategy.into_iter().collect();
            let (row, records) = run_point(&cfg, seed, &sinks)?;
            let results = SweepResults {
                scenario: scenario_for(&cfg)?,
                rows: vec![row.clone()],
            };
            let mut files: Vec<(String, String)> = results.csvs().into_iter().map(|(n, b)| (n.to_string(), b)).collect();
            let head = results.provenance();
            files.push(("config.txt".into(), cfg.to_text()));
            files.push(("layout.csv".into(), format!("{head}node,x,y\n{}", records[0].layout.to_text())));
            if let Some(trace) = &records[0].collection {
                files.push(("collection.csv".into(), format!("{head}{}", trace.to_csv())));
            }
            if verbose {
                files.push(("trace.csv".into(), trace_text(&cfg, seed)?));
            }
            write_files(&dir, &files, force)?;
            let collected = row
                .efficiency
                .first()
                .and_then(|(_, c)| c.last())
                .map_or_else(|| "-".to_string(), |(v, p)| format!("{p:.2}% in {v} visits"));
            let _ = writeln!(
                out,
                "seed={seed} items={} availability={:.4} replicas={:.3} collected={collected}",
                row.total_unique, row.data_availability, row.average_replicas
            );
        }
        Command::Sweep {
            scenario,
            out: dir,
            jobs,
            force,
            verbose,
        } => {
            let sc = load_scenario(&scenario)?;
            if verbose {
                let _ = writeln!(out, "{}: {} runs", sc.name, sc.run_count());
            }
            let results = run_scenario(&sc, jobs)?;
            results.write_csvs(&dir, force)?;
            let _ = writeln!(out, "{}: {} runs written to {}", sc.name, results.rows.len(), dir.display());
        }
        Command::Validate { level } => {
            let report = run_suite(Level::parse(&level).expect("checked by clap"));
            for (case, seed, what) in &report.failures {
                let _ = writeln!(out, "FAIL {case} seed={seed}: {what}");
            }
            let _ = writeln!(out, "validate {level}: {} passed, {} failed", report.passed, report.failures.len());
            if let Some((_, seed, what)) = report.failures.first() {
                return Err(Error::Invariant {
                    seed: *seed,
                    detail: what.clone(),
                });
            }
        }
        Command::Trace {
            config,
            seed,
            out: path,
            force,
        } => {
            let cfg = load_config(&config)?;
            let text = trace_text(&cfg, seed)?;
            if path.exists() && !force {
                return Err(Error::WouldOverwrite(path.display().to_string()));
            }
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, text)?;
            let _ = writeln!(out, "trace written to {}", path.display());
        }
    }
    Ok(0)
}
