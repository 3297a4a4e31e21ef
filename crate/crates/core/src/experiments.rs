//! Parameter sweeps: scenario definitions, seed fan-out, CSV output.
//!
//! A scenario is a cartesian product of node counts, replication strategies,
//! replication degrees and failure fractions, repeated `repetitions` times.
//! Each point runs dissemination once; every listed sink strategy then
//! collects from its own copy of the same post-dissemination network.
//!
//! Seeds depend only on the base seed, the node count and the repetition, so
//! strategies, degrees and failure fractions are compared on the same
//! deployments, sensing intervals and (nested) failure plans.
//!
//! Scenario files reuse the sectioned config format. List-valued keys define
//! the sweep, everything else overrides the base config:
//!
//! ```text
//! [sim]
//! name = my_sweep
//! repetitions = 10
//! base_seed = 7
//!
//! [nodes]
//! counts = 50, 100
//! buffer_capacity = 600
//!
//! [replication]
//! strategies = draco, greedy, random
//! degrees = 2, 5
//!
//! [failure]
//! fractions = 0.2, 0.5
//!
//! [collection]
//! strategies = draco, sa_rw
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::collection::SinkStrategyKind;
use crate::config::{parse_sections, stable_hash, SimConfig};
use crate::engine::{Simulation, SimulationRecord};
use crate::error::{Error, Result};
use crate::metrics::{percent_at, MetricsReport, SpreadPoint};
use crate::replication::ReplicationStrategyKind;
use crate::validate::check_record;

pub const DEFAULT_REPETITIONS: u32 = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub node_counts: Vec<usize>,
    pub replication_strategies: Vec<ReplicationStrategyKind>,
    pub replication_degrees: Vec<u32>,
    pub failure_fractions: Vec<f64>,
    /// Empty means dissemination only.
    pub collection_strategies: Vec<SinkStrategyKind>,
    pub repetitions: u32,
    pub base_seed: u64,
    /// `(section, key) -> value`, applied to the default config.
    pub overrides: BTreeMap<(String, String), String>,
}

/// One point of the sweep, without the repetition index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub node_count: usize,
    pub strategy: ReplicationStrategyKind,
    pub degree: u32,
    pub fraction: f64,
}

impl Scenario {
    fn single(name: &str) -> Self {
        Scenario {
            name: name.to_string(),
            node_counts: vec![100],
            replication_strategies: ReplicationStrategyKind::ALL.to_vec(),
            replication_degrees: vec![5],
            failure_fractions: vec![0.0],
            collection_strategies: Vec::new(),
            repetitions: DEFAULT_REPETITIONS,
            base_seed: 1,
            overrides: BTreeMap::new(),
        }
    }

    /// Base config with overrides applied.
    pub fn base_config(&self) -> Result<SimConfig> {
        let mut cfg = SimConfig::default();
        for ((section, key), value) in &self.overrides {
            cfg.set(section, key, value)?;
        }
        cfg.collection_strategy = None;
        Ok(cfg)
    }

    pub fn points(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for &node_count in &self.node_counts {
            for &strategy in &self.replication_strategies {
                for &degree in &self.replication_degrees {
                    for &fraction in &self.failure_fractions {
                        out.push(SweepPoint {
                            node_count,
                            strategy,
                            degree,
                            fraction,
                        });
                    }
                }
            }
        }
        out
    }

    /// Number of dissemination runs.
    pub fn run_count(&self) -> usize {
        self.points().len() * self.repetitions as usize
    }

    /// Seed for repetition `rep` at `point`.
    pub fn seed_for(&self, point: &SweepPoint, rep: u32) -> u64 {
        run_seed(self.base_seed, point.node_count, rep)
    }

    /// The full config for one point.
    pub fn config_for(&self, point: &SweepPoint) -> Result<SimConfig> {
        let mut cfg = self.base_config()?;
        cfg.node_count = point.node_count;
        cfg.replication_strategy = point.strategy;
        cfg.replication_degree = point.degree;
        cfg.failure_fraction = point.fraction;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |key: &str| Error::config(key, "list must not be empty");
        if self.node_counts.is_empty() {
            return Err(empty("nodes.counts"));
        }
        if self.replication_strategies.is_empty() {
            return Err(empty("replication.strategies"));
        }
        if self.replication_degrees.is_empty() {
            return Err(empty("replication.degrees"));
        }
        if self.failure_fractions.is_empty() {
            return Err(empty("failure.fractions"));
        }
        if self.repetitions == 0 {
            return Err(Error::config("sim.repetitions", "must be at least 1"));
        }
        for p in self.points() {
            self.config_for(&p)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut sc = Scenario::single("custom");
        sc.collection_strategies = Vec::new();
        for e in parse_sections(text)? {
            let name = format!("{}.{}", e.section, e.key);
            let bad = |why: String| Error::config(name.clone(), format!("`{}`: {why}", e.value));
            let items: Vec<&str> = e.value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            match (e.section.as_str(), e.key.as_str()) {
                ("sim", "name") => sc.name = e.value.clone(),
                ("sim", "repetitions") => sc.repetitions = e.value.parse().map_err(|_| bad("not an integer".into()))?,
                ("sim", "base_seed") => sc.base_seed = e.value.parse().map_err(|_| bad("not an integer".into()))?,
                ("nodes", "counts") => sc.node_counts = parse_list(&items, |s| s.parse().ok()).map_err(bad)?,
                ("replication", "strategies") => {
                    sc.replication_strategies = parse_list(&items, ReplicationStrategyKind::parse).map_err(bad)?
                }
                ("replication", "degrees") => sc.replication_degrees = parse_list(&items, |s| s.parse().ok()).map_err(bad)?,
                ("failure", "fractions") => sc.failure_fractions = parse_list(&items, |s| s.parse().ok()).map_err(bad)?,
                ("collection", "strategies") => {
                    sc.collection_strategies = if e.value == "none" {
                        Vec::new()
                    } else {
                        parse_list(&items, SinkStrategyKind::parse).map_err(bad)?
                    }
                }
                (section, key) => {
                    // Let the config reject unknown keys and bad values now.
                    SimConfig::default().set(section, key, &e.value)?;
                    sc.overrides.insert((section.to_string(), key.to_string()), e.value.clone());
                }
            }
        }
        sc.validate()?;
        Ok(sc)
    }

    /// Canonical text form, readable by `from_text`.
    pub fn to_text(&self) -> String {
        let join = |v: Vec<String>| v.join(", ");
        let mut sections: BTreeMap<&str, Vec<String>> = BTreeMap::new();
        let mut push = |sec: &'static str, line: String| sections.entry(sec).or_default().push(line);
        push("sim", format!("name = {}", self.name));
        push("sim", format!("repetitions = {}", self.repetitions));
        push("sim", format!("base_seed = {}", self.base_seed));
        push(
            "nodes",
            format!("counts = {}", join(self.node_counts.iter().map(|n| n.to_string()).collect())),
        );
        push(
            "replication",
            format!(
                "strategies = {}",
                join(self.replication_strategies.iter().map(|s| s.as_str().to_string()).collect())
            ),
        );
        push(
            "replication",
            format!(
                "degrees = {}",
                join(self.replication_degrees.iter().map(|r| r.to_string()).collect())
            ),
        );
        push(
            "failure",
            format!(
                "fractions = {}",
                join(self.failure_fractions.iter().map(|f| f.to_string()).collect())
            ),
        );
        let coll = if self.collection_strategies.is_empty() {
            "none".to_string()
        } else {
            join(self.collection_strategies.iter().map(|s| s.as_str().to_string()).collect())
        };
        push("collection", format!("strategies = {coll}"));
        let mut s = String::new();
        for sec in ["field", "nodes", "replication", "failure", "collection", "sim"] {
            let overrides: Vec<String> = self
                .overrides
                .iter()
                .filter(|((section, _), _)| section == sec)
                .map(|((_, k), v)| format!("{k} = {v}"))
                .collect();
            let lines: Vec<&String> = sections.get(sec).into_iter().flatten().chain(overrides.iter()).collect();
            if lines.is_empty() {
                continue;
            }
            let _ = writeln!(s, "[{sec}]");
            for l in lines {
                let _ = writeln!(s, "{l}");
            }
            s.push('\n');
        }
        s
    }
}

fn parse_list<T>(items: &[&str], f: impl Fn(&str) -> Option<T>) -> std::result::Result<Vec<T>, String> {
    if items.is_empty() {
        return Err("empty list".into());
    }
    items
        .iter()
        .map(|s| f(s).ok_or_else(|| format!("bad list element `{s}`")))
        .collect()
}

/// `base_seed + hash(node count) + rep`, wrapping.
pub fn run_seed(base_seed: u64, node_count: usize, rep: u32) -> u64 {
    base_seed
        .wrapping_add(stable_hash(format!("nodes={node_count}").as_bytes()))
        .wrapping_add(u64::from(rep))
}

/// Seven presets, one per experiment family, plus a quick `smoke` run.
pub fn builtin_scenarios() -> Vec<Scenario> {
    let all_r = ReplicationStrategyKind::ALL.to_vec();
    let all_sink = SinkStrategyKind::ALL.to_vec();
    let densities = vec![20, 50, 100, 150, 200];
    vec![
        Scenario {
            replication_degrees: vec![2, 3, 4, 5],
            failure_fractions: vec![0.2, 0.5, 0.7],
            ..Scenario::single("fig_availability_vs_R")
        },
        Scenario {
            replication_degrees: vec![2, 3, 5],
            failure_fractions: vec![0.0, 0.1, 0.2, 0.5, 0.7],
            ..Scenario::single("fig_availability_vs_F")
        },
        Scenario {
            node_counts: densities.clone(),
            replication_degrees: vec![2, 3, 4, 5],
            ..Scenario::single("fig_replicas_vs_density")
        },
        Scenario {
            replication_degrees: vec![2, 3, 4, 5],
            ..Scenario::single("fig_spread_vs_replica_index")
        },
        Scenario {
            replication_strategies: vec![ReplicationStrategyKind::Draco],
            replication_degrees: vec![1, 2, 3, 4, 5],
            collection_strategies: all_sink.clone(),
            ..Scenario::single("fig_efficiency_vs_R")
        },
        Scenario {
            node_counts: densities,
            replication_strategies: vec![ReplicationStrategyKind::Draco],
            collection_strategies: all_sink.clone(),
            ..Scenario::single("fig_efficiency_vs_density")
        },
        Scenario {
            replication_strategies: vec![ReplicationStrategyKind::Draco],
            failure_fractions: vec![0.1, 0.2, 0.5, 0.7],
            collection_strategies: all_sink.clone(),
            ..Scenario::single("fig_efficiency_vs_F")
        },
        Scenario {
            node_counts: vec![30],
            replication_strategies: all_r,
            replication_degrees: vec![2, 3],
            failure_fractions: vec![0.0, 0.5],
            collection_strategies: all_sink,
            repetitions: 2,
            ..Scenario::single("smoke")
        },
    ]
}

pub fn builtin_scenario(name: &str) -> Option<Scenario> {
    builtin_scenarios().into_iter().find(|s| s.name == name)
}

/// Metrics of one dissemination run plus the curves of each sink strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub point: SweepPoint,
    pub seed: u64,
    pub data_availability: f64,
    pub average_replicas: f64,
    pub average_replicas_defined: bool,
    pub replica_spread: Vec<SpreadPoint>,
    pub total_unique: usize,
    pub efficiency: Vec<(SinkStrategyKind, Vec<(u32, f64)>)>,
}

/// Runs dissemination for `config`, then one collection per sink strategy.
/// Every resulting record passes the invariant checks or the run fails.
pub fn run_point(config: &SimConfig, seed: u64, sinks: &[SinkStrategyKind]) -> Result<(RunRow, Vec<SimulationRecord>)> {
    let mut cfg = config.clone();
    cfg.collection_strategy = None;
    let mut sim = Simulation::new(cfg, seed)?;
    sim.run_dissemination()?;
    let mut records = Vec::new();
    if sinks.is_empty() {
        records.push(sim.run_until_done()?);
    } else {
        for &k in sinks {
            let mut s = sim.clone();
            s.config.collection_strategy = Some(k);
            records.push(s.run_until_done()?);
        }
    }
    for r in &records {
        check_record(r).map_err(|detail| Error::Invariant { seed, detail })?;
    }
    let base = MetricsReport::from_record(&records[0]);
    let row = RunRow {
        point: SweepPoint {
            node_count: config.node_count,
            strategy: config.replication_strategy,
            degree: config.replication_degree,
            fraction: config.failure_fraction,
        },
        seed,
        data_availability: base.data_availability,
        average_replicas: base.average_replicas,
        average_replicas_defined: base.average_replicas_defined,
        replica_spread: base.replica_spread,
        total_unique: base.total_unique,
        efficiency: sinks
            .iter()
            .zip(&records)
            .map(|(&k, r)| (k, MetricsReport::from_record(r).efficiency_curve))
            .collect(),
    };
    Ok((row, records))
}

/// All rows of a sweep, in sweep order (point, then repetition).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResults {
    pub scenario: Scenario,
    pub rows: Vec<RunRow>,
}

/// Runs every point and repetition of `scenario` on `jobs` threads
/// (`0` means one per core). The output does not depend on `jobs`.
pub fn run_scenario(scenario: &Scenario, jobs: usize) -> Result<SweepResults> {
    scenario.validate()?;
    let tasks: Vec<(SweepPoint, u32)> = scenario
        .points()
        .into_iter()
        .flat_map(|p| (0..scenario.repetitions).map(move |rep| (p, rep)))
        .collect();
    let work = || -> Result<Vec<RunRow>> {
        tasks
            .par_iter()
            .map(|(p, rep)| {
                let cfg = scenario.config_for(p)?;
                run_point(&cfg, scenario.seed_for(p, *rep), &scenario.collection_strategies).map(|(row, _)| row)
            })
            .collect()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::config("jobs", e.to_string()))?;
    let rows = pool.install(work)?;
    Ok(SweepResults {
        scenario: scenario.clone(),
        rows,
    })
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub std_err: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Summary {
                n,
                mean: f64::NAN,
                std_err: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std_err = if n < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        Summary { n, mean, std_err }
    }
}

/// Raw and mean CSV files written by `write_csvs`.
pub const CSV_FILES: [&str; 8] = [
    "availability.csv",
    "replicas.csv",
    "spread.csv",
    "efficiency.csv",
    "availability_mean.csv",
    "replicas_mean.csv",
    "spread_mean.csv",
    "efficiency_mean.csv",
];

impl SweepResults {
    pub fn rows_at(&self, point: &SweepPoint) -> impl Iterator<Item = &RunRow> + '_ {
        let p = *point;
        self.rows.iter().filter(move |r| r.point == p)
    }

    pub fn availability(&self, point: &SweepPoint) -> Summary {
        Summary::of(&self.rows_at(point).map(|r| r.data_availability).collect::<Vec<_>>())
    }

    pub fn replicas(&self, point: &SweepPoint) -> Summary {
        Summary::of(
            &self
                .rows_at(point)
                .filter(|r| r.average_replicas_defined)
                .map(|r| r.average_replicas)
                .collect::<Vec<_>>(),
        )
    }

    /// Mean distance of the `index`-th copy, over runs where it exists.
    pub fn spread(&self, point: &SweepPoint, index: u32) -> Summary {
        Summary::of(
            &self
                .rows_at(point)
                .filter_map(|r| r.replica_spread.iter().find(|s| s.replica_index == index && s.count > 0))
                .map(|s| s.mean_distance_m)
                .collect::<Vec<_>>(),
        )
    }

    fn curves(&self, point: &SweepPoint, sink: SinkStrategyKind) -> Vec<&[(u32, f64)]> {
        self.rows_at(point)
            .filter_map(|r| r.efficiency.iter().find(|(k, _)| *k == sink).map(|(_, c)| c.as_slice()))
            .collect()
    }

    /// Mean percent collected after `visits` productive visits.
    pub fn efficiency_at(&self, point: &SweepPoint, sink: SinkStrategyKind, visits: u32) -> Summary {
        Summary::of(&self.curves(point, sink).iter().map(|c| percent_at(c, visits)).collect::<Vec<_>>())
    }

    /// Terminal percent collected, per run.
    pub fn efficiency_final(&self, point: &SweepPoint, sink: SinkStrategyKind) -> Summary {
        Summary::of(
            &self
                .curves(point, sink)
                .iter()
                .map(|c| c.last().map_or(0.0, |(_, p)| *p))
                .collect::<Vec<_>>(),
        )
    }

    /// Longest curve length for `sink` at `point`.
    pub fn max_visits(&self, point: &SweepPoint, sink: SinkStrategyKind) -> u32 {
        self.curves(point, sink)
            .iter()
            .filter_map(|c| c.last())
            .map(|(v, _)| *v)
            .max()
            .unwrap_or(0)
    }

    fn unique_points(&self) -> Vec<SweepPoint> {
        let mut out: Vec<SweepPoint> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.point) {
                out.push(r.point);
            }
        }
        out
    }

    /// Provenance comment placed at the top of every CSV.
    pub fn provenance(&self) -> String {
        let hash = self.scenario.base_config().map(|c| c.hash()).unwrap_or(0) ^ stable_hash(self.scenario.to_text().as_bytes());
        let mut seeds: Vec<u64> = self.rows.iter().map(|r| r.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        let seeds: Vec<String> = seeds.iter().map(u64::to_string).collect();
        format!(
            "# draco-sim {} scenario={} config_hash={hash:016x} seeds={}\n",
            env!("CARGO_PKG_VERSION"),
            self.scenario.name,
            seeds.join(";")
        )
    }

    /// Renders every CSV as `(file name, contents)`.
    pub fn csvs(&self) -> Vec<(&'static str, String)> {
        let head = self.provenance();
        let key = |p: &SweepPoint| format!("{},{},{},{}", p.strategy.as_str(), p.node_count, p.degree, p.fraction);
        let mut avail = format!("{head}strategy,N,R,F,seed,value\n");
        let mut reps = format!("{head}strategy,N,R,F,seed,value\n");
        let mut spread = format!("{head}strategy,N,R,F,seed,replica_index,mean_distance_m,count\n");
        let mut eff = format!("{head}strategy,N,R,F,collection,seed,visits,percent\n");
        for r in &self.rows {
            let k = key(&r.point);
            let _ = writeln!(avail, "{k},{},{}", r.seed, r.data_availability);
            let _ = writeln!(reps, "{k},{},{}", r.seed, r.average_replicas);
            for s in &r.replica_spread {
                let _ = writeln!(spread, "{k},{},{},{},{}", r.seed, s.replica_index, s.mean_distance_m, s.count);
            }
            for (sink, curve) in &r.efficiency {
                for (v, pct) in curve {
                    let _ = writeln!(eff, "{k},{},{},{v},{pct}", sink.as_str(), r.seed);
                }
            }
        }
        let mut avail_m = format!("{head}strategy,N,R,F,runs,mean,std_err\n");
        let mut reps_m = avail_m.clone();
        let mut spread_m = format!("{head}strategy,N,R,F,replica_index,runs,mean,std_err\n");
        let mut eff_m = format!("{head}strategy,N,R,F,collection,visits,runs,mean,std_err\n");
        for p in self.unique_points() {
            let k = key(&p);
            let a = self.availability(&p);
            let _ = writeln!(avail_m, "{k},{},{},{}", a.n, a.mean, a.std_err);
            let m = self.replicas(&p);
            let _ = writeln!(reps_m, "{k},{},{},{}", m.n, m.mean, m.std_err);
            for idx in 1..=p.degree {
                let s = self.spread(&p, idx);
                if s.n > 0 {
                    let _ = writeln!(spread_m, "{k},{idx},{},{},{}", s.n, s.mean, s.std_err);
                }
            }
            for &sink in &self.scenario.collection_strategies {
                for v in 1..=self.max_visits(&p, sink) {
                    let e = self.efficiency_at(&p, sink, v);
                    let _ = writeln!(eff_m, "{k},{},{v},{},{},{}", sink.as_str(), e.n, e.mean, e.std_err);
                }
            }
        }
        CSV_FILES
            .into_iter()
            .zip([avail, reps, spread, eff, avail_m, reps_m, spread_m, eff_m])
            .collect()
    }

    /// Writes the CSVs into `dir`, creating it if needed. Existing files are
    /// only replaced with `force`.
    pub fn write_csvs(&self, dir: &Path, force: bool) -> Result<()> {
        write_files(dir, &self.csvs(), force)
    }
}

/// Writes `(name, contents)` pairs into `dir`. Checks every target before
/// writing anything, so a refusal leaves the directory untouched.
pub fn write_files<S: AsRef<str>>(dir: &Path, files: &[(S, String)], force: bool) -> Result<()> {
    fs::create_dir_all(dir)?;
    if !force {
        if let Some((name, _)) = files.iter().find(|(n, _)| dir.join(n.as_ref()).exists()) {
            return Err(Error::WouldOverwrite(dir.join(name.as_ref()).display().to_string()));
        }
    }
    for (name, body) in files {
        fs::write(dir.join(name.as_ref()), body)?;
    }
    Ok(())
}
