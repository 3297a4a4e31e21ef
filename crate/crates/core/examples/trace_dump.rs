//! Event trace of a five-node line where one node senses a single item.

use draco_sim::failure::FailurePlan;
use draco_sim::model::{FieldGeometry, Point};
use draco_sim::topology::NodeLayout;
use draco_sim::{SimConfig, Simulation};

fn main() -> draco_sim::Result<()> {
    let cfg = SimConfig {
        node_count: 5,
        alpha: 10.0,
        replication_degree: 3,
        dissemination_duration: 3.0,
        collection_strategy: None,
        ..SimConfig::default()
    };
    let positions = (1..=5).map(|i| Point::new(10.0 * f64::from(i), 50.0)).collect();
    let layout = NodeLayout::new(FieldGeometry::new(100.0, 100.0)?, positions)?;
    let intervals = vec![2.5, 4.0, 4.0, 4.0, 4.0];
    let mut sim = Simulation::from_parts(cfg, 0, layout, intervals, FailurePlan::empty())?;
    sim.enable_trace();
    let record = sim.run_until_done()?;
    println!("time,seq,kind,actor,peer");
    for e in record.event_trace.unwrap_or_default() {
        println!("{}", e.to_line());
    }
    for line in record.ledger.to_lines() {
        println!("# {line}");
    }
    Ok(())
}
