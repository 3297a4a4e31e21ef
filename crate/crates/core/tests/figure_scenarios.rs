//! Hand-built replication walk-throughs with R = 3.

mod common;

use common::{holders, idle_world, set_row};
use draco_sim::config::SimConfig;
use draco_sim::engine::{EventKind, Simulation};
use draco_sim::model::{DataItemId, DropReason, NodeId};
use draco_sim::replication::ReplicationStrategyKind;

fn cfg() -> SimConfig {
    SimConfig {
        alpha: 10.0,
        replication_degree: 3,
        dissemination_duration: 1.0,
        ..SimConfig::default()
    }
}

fn sense_at_node_1(sim: &mut Simulation) {
    sim.schedule(1.0, EventKind::SenseTimer(NodeId(1)));
    sim.run_dissemination().unwrap();
}

fn drops(sim: &Simulation) -> Vec<(u32, DropReason)> {
    sim.ledger().drops().iter().map(|d| (d.node.0, d.reason)).collect()
}

/// Nodes 1, 2, 3 form a triangle and 4 hangs off 3.
const KITE: [(f64, f64); 4] = [(10.0, 10.0), (14.0, 17.0), (18.0, 10.0), (27.0, 10.0)];

#[test]
fn all_replicas_placed_avoiding_common_neighbor() {
    let mut sim = idle_world(cfg(), &KITE);
    assert_eq!(sim.adjacency().neighbors(NodeId(1)), &[NodeId(2), NodeId(3)]);
    assert_eq!(sim.adjacency().neighbors(NodeId(3)), &[NodeId(1), NodeId(2), NodeId(4)]);
    set_row(&mut sim, 1, 2, 2, 5);
    set_row(&mut sim, 1, 3, 3, 5);
    set_row(&mut sim, 3, 1, 2, 5);
    // Node 2 advertises more neighbors than 4 but shares node 1's neighborhood.
    set_row(&mut sim, 3, 2, 9, 5);
    set_row(&mut sim, 3, 4, 1, 5);
    sense_at_node_1(&mut sim);
    assert_eq!(holders(&sim, 1, 0), vec![1, 3, 4]);
    assert!(drops(&sim).is_empty());
    let rec = sim.ledger().item(&DataItemId::new(NodeId(1), 0)).unwrap();
    let hops: Vec<u32> = rec.placements.iter().map(|p| p.hop_count).collect();
    assert_eq!(hops, vec![0, 1, 2]);
}

#[test]
fn full_relay_forwards_to_common_neighbor() {
    // Triangle 1, 3, 4 with node 2 hanging off node 1.
    let pts = [(20.0, 20.0), (12.0, 20.0), (25.0, 27.0), (28.0, 20.0)];
    let mut sim = idle_world(cfg(), &pts);
    assert_eq!(sim.adjacency().neighbors(NodeId(1)), &[NodeId(2), NodeId(3), NodeId(4)]);
    assert_eq!(sim.adjacency().neighbors(NodeId(4)), &[NodeId(1), NodeId(3)]);
    set_row(&mut sim, 1, 2, 1, 5);
    set_row(&mut sim, 1, 3, 2, 5);
    // Node 4 still advertises free memory, but has filled up since.
    set_row(&mut sim, 1, 4, 3, 5);
    sim.node_mut(NodeId(4)).buffer_capacity = 0;
    set_row(&mut sim, 4, 1, 3, 5);
    set_row(&mut sim, 4, 3, 2, 5);
    set_row(&mut sim, 3, 1, 3, 5);
    set_row(&mut sim, 3, 4, 2, 0);
    sense_at_node_1(&mut sim);
    assert_eq!(holders(&sim, 1, 0), vec![1, 3]);
    assert_eq!(drops(&sim), vec![(3, DropReason::NoCandidate)]);
}

#[test]
fn full_owner_hands_off_and_walk_dead_ends() {
    // A line 1 - 3 - 2.
    let pts = [(20.0, 20.0), (36.0, 20.0), (28.0, 20.0)];
    let mut sim = idle_world(cfg(), &pts);
    sim.node_mut(NodeId(1)).buffer_capacity = 0;
    set_row(&mut sim, 1, 3, 2, 5);
    set_row(&mut sim, 3, 1, 1, 0);
    set_row(&mut sim, 3, 2, 1, 5);
    set_row(&mut sim, 2, 3, 2, 5);
    sense_at_node_1(&mut sim);
    assert_eq!(holders(&sim, 1, 0), vec![3, 2]);
    assert_eq!(drops(&sim), vec![(2, DropReason::NoCandidate)]);
    let rec = sim.ledger().item(&DataItemId::new(NodeId(1), 0)).unwrap();
    assert_eq!(rec.placements[0].hop_count, 1);
}

#[test]
fn greedy_ignores_common_neighbors() {
    let mut sim = idle_world(
        SimConfig {
            replication_strategy: ReplicationStrategyKind::Greedy,
            ..cfg()
        },
        &KITE,
    );
    set_row(&mut sim, 1, 2, 2, 5);
    set_row(&mut sim, 1, 3, 3, 9);
    set_row(&mut sim, 3, 1, 2, 5);
    set_row(&mut sim, 3, 2, 9, 8);
    set_row(&mut sim, 3, 4, 1, 5);
    sense_at_node_1(&mut sim);
    // Free memory leads straight back into node 1's neighborhood.
    assert_eq!(holders(&sim, 1, 0), vec![1, 3, 2]);
}
