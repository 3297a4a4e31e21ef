//! Invariant checks over finished runs, and a small suite that exercises them
//! on micro-worlds.

use std::collections::{BTreeMap, BTreeSet};

use crate::collection::SinkStrategyKind;
use crate::config::SimConfig;
use crate::engine::{Simulation, SimulationRecord};
use crate::experiments::run_point;
use crate::failure::FailureMode;
use crate::metrics::MetricsReport;
use crate::model::NodeId;
use crate::replication::ReplicationStrategyKind;

/// Checks one finished run. Returns a description of the first violation.
pub fn check_record(rec: &SimulationRecord) -> Result<(), String> {
    let cfg = &rec.config;
    rec.ledger.check_invariants()?;

    let mut held: BTreeMap<NodeId, BTreeSet<_>> = BTreeMap::new();
    for (id, item) in rec.ledger.items() {
        if item.placements.len() > cfg.replication_degree as usize {
            return Err(format!(
                "{id:?} has {} copies, R = {}",
                item.placements.len(),
                cfg.replication_degree
            ));
        }
        for p in &item.placements {
            if p.hop_count as usize >= cfg.node_count.max(1) {
                return Err(format!("{id:?} placed after {} hops", p.hop_count));
            }
            if p.placed_at < item.generated_at {
                return Err(format!("{id:?} placed before it was generated"));
            }
            if !rec.ledger.is_alive_at(p.holder, p.placed_at) {
                return Err(format!("{id:?} placed on {} after it failed", p.holder));
            }
            held.entry(p.holder).or_default().insert(*id);
        }
    }
    for n in &rec.nodes {
        if n.buffer.len() > n.buffer_capacity as usize {
            return Err(format!("node {} holds {} > {}", n.id, n.buffer.len(), n.buffer_capacity));
        }
        let buf: BTreeSet<_> = n.buffer.iter().copied().collect();
        if buf.len() != n.buffer.len() {
            return Err(format!("node {} holds a duplicate item", n.id));
        }
        if buf != held.remove(&n.id).unwrap_or_default() {
            return Err(format!("node {} buffer disagrees with the ledger", n.id));
        }
        if n.alive == rec.failure_plan.is_victim(n.id) {
            return Err(format!("node {} liveness disagrees with the failure plan", n.id));
        }
    }
    let failed: BTreeSet<NodeId> = rec.ledger.failures().keys().copied().collect();
    if failed != rec.failure_plan.victims {
        return Err("recorded failures differ from the plan".into());
    }

    let m = MetricsReport::from_record(rec);
    if !(0.0..=1.0).contains(&m.data_availability) {
        return Err(format!("availability {} outside [0, 1]", m.data_availability));
    }
    if m.average_replicas > f64::from(cfg.replication_degree) + 1e-12 {
        return Err(format!("average replicas {} above R", m.average_replicas));
    }
    let diag = rec.layout.geometry().diagonal();
    if let Some(s) = m.replica_spread.iter().find(|s| s.mean_distance_m > diag + 1e-9) {
        return Err(format!(
            "replica {} spread {} beyond the diagonal",
            s.replica_index, s.mean_distance_m
        ));
    }
    if m.efficiency_curve.windows(2).any(|w| w[1].1 < w[0].1) || m.efficiency_curve.iter().any(|(_, p)| *p > 100.0) {
        return Err("efficiency curve decreases or exceeds 100%".into());
    }

    if let (Some(trace), Some(sink)) = (&rec.collection, &rec.sink) {
        let mut seen = BTreeSet::new();
        let exclusive = cfg.collection_strategy != Some(SinkStrategyKind::Rw);
        for e in trace.productive() {
            let n = e.selected_node.expect("productive entry");
            if exclusive && !seen.insert(n) {
                return Err(format!("sink visited node {n} twice"));
            }
            if !rec.nodes[n.index()].alive {
                return Err(format!("sink collected from dead node {n}"));
            }
        }
        if sink.collected.iter().any(|id| rec.ledger.item(id).is_none()) {
            return Err("sink collected an unknown item".into());
        }
        if trace.final_unique() as usize != sink.collected.len() {
            return Err("collection trace total disagrees with the sink".into());
        }
        if sink.sites_visited > sink.max_sites {
            return Err("site budget exceeded".into());
        }
        for w in sink.visited_sites.windows(2) {
            if w[0].distance(&w[1]) <= sink.cr {
                return Err("consecutive sites within the sink radius".into());
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

impl Level {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "quick" => Some(Level::Quick),
            "full" => Some(Level::Full),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SuiteReport {
    pub passed: usize,
    /// `(case, seed, what went wrong)`
    pub failures: Vec<(String, u64, String)>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs every strategy pair over small worlds and checks each record, plus a
/// same-seed rerun for byte-identical ledgers and traces.
pub fn run_suite(level: Level) -> SuiteReport {
    let (sizes, seeds): (&[usize], u64) = match level {
        Level::Quick => (&[5, 12], 3),
        Level::Full => (&[5, 12, 30, 60], 10),
    };
    let mut report = SuiteReport::default();
    for &n in sizes {
        for strategy in ReplicationStrategyKind::ALL {
            for (fraction, mode) in [
                (0.0, FailureMode::DuringDissemination),
                (0.4, FailureMode::DuringDissemination),
                (0.4, FailureMode::AtPhaseBoundary),
            ] {
                for seed in 0..seeds {
                    let cfg = SimConfig {
                        node_count: n,
                        alpha: 35.0,
                        buffer_capacity: 40,
                        replication_strategy: strategy,
                        replication_degree: 3,
                        failure_fraction: fraction,
                        failure_mode: mode,
                        dissemination_duration: 60.0,
                        max_sites: Some(4 * n as u32),
                        ..SimConfig::default()
                    };
                    let case = format!("n={n} {} F={fraction} {}", strategy.as_str(), mode.as_str());
                    let mut record = |res: Result<(), String>| match res {
                        Ok(()) => report.passed += 1,
                        Err(e) => report.failures.push((case.clone(), seed, e)),
                    };
                    record(run_point(&cfg, seed, &SinkStrategyKind::ALL).map(|_| ()).map_err(|e| e.to_string()));
                    record(rerun_is_identical(&cfg, seed));
                }
            }
        }
    }
    report
}

fn rerun_is_identical(cfg: &SimConfig, seed: u64) -> Result<(), String> {
    let once = || -> Result<SimulationRecord, String> {
        let mut sim = Simulation::new(cfg.clone(), seed).map_err(|e| e.to_string())?;
        sim.enable_trace();
        sim.run_until_done().map_err(|e| e.to_string())
    };
    let (a, b) = (once()?, once()?);
    if a != b || a.ledger.to_lines() != b.ledger.to_lines() {
        return Err("same seed produced different runs".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_passes() {
        let r = run_suite(Level::Quick);
        assert!(r.ok(), "{:?}", r.failures);
        assert!(r.passed > 0);
    }

    #[test]
    fn tampering_is_caught() {
        let cfg = SimConfig {
            node_count: 8,
            alpha: 40.0,
            dissemination_duration: 30.0,
            ..SimConfig::default()
        };
        let rec = Simulation::new(cfg, 1).unwrap().run_until_done().unwrap();
        check_record(&rec).unwrap();
        let mut bad = rec.clone();
        let victim = bad.nodes.iter().position(|n| !n.buffer.is_empty()).unwrap();
        bad.nodes[victim].buffer.pop();
        assert!(check_record(&bad).unwrap_err().contains("ledger"));
        let mut bad = rec;
        bad.nodes[0].alive = false;
        assert!(check_record(&bad).is_err());
    }
}
