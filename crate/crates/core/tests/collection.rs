use std::collections::BTreeSet;

use draco_sim::collection::SinkStrategyKind;
use draco_sim::config::SimConfig;
use draco_sim::experiments::run_point;
use draco_sim::metrics::{collection_efficiency, visits_to_reach};
use draco_sim::model::{DataItemId, NodeId};
use draco_sim::SimulationRecord;

fn config(f: f64) -> SimConfig {
    SimConfig {
        node_count: 50,
        failure_fraction: f,
        dissemination_duration: 100.0,
        replication_degree: 3,
        ..SimConfig::default()
    }
}

fn records(f: f64, seed: u64) -> Vec<SimulationRecord> {
    run_point(&config(f), seed, &SinkStrategyKind::ALL).unwrap().1
}

fn held_by_alive(rec: &SimulationRecord) -> BTreeSet<DataItemId> {
    rec.nodes
        .iter()
        .filter(|n| n.alive)
        .flat_map(|n| n.buffer.iter().copied())
        .collect()
}

#[test]
fn every_sink_sees_the_same_network() {
    let recs = records(0.3, 7);
    assert_eq!(recs.len(), 3);
    for r in &recs[1..] {
        assert_eq!(r.ledger, recs[0].ledger);
        assert_eq!(r.nodes, recs[0].nodes);
    }
    let kinds: Vec<_> = recs.iter().map(|r| r.config.collection_strategy.unwrap()).collect();
    assert_eq!(kinds, SinkStrategyKind::ALL.to_vec());
}

#[test]
fn sink_only_collects_what_alive_nodes_hold() {
    for seed in 0..5 {
        for rec in records(0.5, seed) {
            let sink = rec.sink.as_ref().unwrap();
            let reachable = held_by_alive(&rec);
            assert!(sink.collected.is_subset(&reachable));
            let trace = rec.collection.as_ref().unwrap();
            for e in trace.productive() {
                let n = e.selected_node.unwrap();
                assert!(rec.nodes[n.index()].alive, "dead node {n} selected");
                assert!(rec.nodes[n.index()].position.distance(&e.site) <= rec.config.sink_cr);
            }
        }
    }
}

#[test]
fn draco_and_sa_rw_never_revisit_and_stop_when_done() {
    for seed in 0..5 {
        for rec in records(0.2, seed) {
            let strategy = rec.config.collection_strategy.unwrap();
            let trace = rec.collection.as_ref().unwrap();
            let sink = rec.sink.as_ref().unwrap();
            assert!(sink.sites_visited <= rec.config.max_sites());
            assert_eq!(trace.len() as u32, sink.sites_visited);
            if strategy == SinkStrategyKind::Rw {
                continue;
            }
            let picked: Vec<NodeId> = trace.productive().map(|e| e.selected_node.unwrap()).collect();
            let distinct: BTreeSet<NodeId> = picked.iter().copied().collect();
            assert_eq!(picked.len(), distinct.len(), "{strategy:?} revisited a node");
            let alive: BTreeSet<NodeId> = rec.nodes.iter().filter(|n| n.alive).map(|n| n.id).collect();
            if sink.sites_visited < rec.config.max_sites() {
                assert_eq!(distinct, alive, "{strategy:?} stopped early");
            }
        }
    }
}

#[test]
fn draco_only_pulls_when_something_is_new() {
    for seed in 0..5 {
        let rec = &records(0.0, seed)[0];
        for e in &rec.collection.as_ref().unwrap().entries {
            match e.selected_node {
                Some(n) => {
                    assert!(e.new_items > 0);
                    let best = e.replies.iter().map(|r| r.1).max().unwrap();
                    assert_eq!(e.new_items, best);
                    let first = e.replies.iter().find(|r| r.1 == best).unwrap().0;
                    assert_eq!(n, first);
                }
                None => assert!(e.replies.iter().all(|r| r.1 == 0)),
            }
        }
    }
}

#[test]
fn rw_uses_its_whole_budget() {
    let rec = &records(0.0, 3)[2];
    assert_eq!(rec.sink.as_ref().unwrap().sites_visited, rec.config.max_sites());
}

#[test]
fn efficiency_curve_counts_productive_visits() {
    for rec in records(0.2, 9) {
        let trace = rec.collection.as_ref().unwrap();
        let total = rec.ledger.total_unique();
        let curve = collection_efficiency(trace, total);
        assert_eq!(curve.len(), trace.productive().count());
        assert!(curve.windows(2).all(|w| w[0].0 + 1 == w[1].0 && w[0].1 <= w[1].1));
        let last = curve.last().unwrap().1;
        let expected = 100.0 * f64::from(trace.final_unique()) / total as f64;
        assert!((last - expected).abs() < 1e-9);
        assert!(visits_to_reach(&curve, last).unwrap() <= curve.len() as u32);
    }
}

#[test]
fn lossless_network_is_fully_collected_without_failures() {
    for seed in 0..3 {
        let recs = records(0.0, seed);
        for rec in &recs[..2] {
            let sink = rec.sink.as_ref().unwrap();
            assert_eq!(
                sink.collected.len(),
                rec.ledger.total_unique(),
                "{:?}",
                rec.config.collection_strategy
            );
        }
    }
}
