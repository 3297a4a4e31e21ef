//! One simulation with the default parameters, summarized.
//!
//! `cargo run --release --example single_run -- 42`

use draco_sim::metrics::MetricsReport;
use draco_sim::{SimConfig, Simulation};

fn main() -> draco_sim::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let cfg = SimConfig {
        failure_fraction: 0.3,
        ..SimConfig::default()
    };
    let record = Simulation::new(cfg, seed)?.run_until_done()?;
    let m = MetricsReport::from_record(&record);
    println!("seed {seed}: {} items sensed by {} nodes", m.total_unique, record.layout.len());
    println!("availability after 30% failures: {:.4}", m.data_availability);
    println!("replicas per item: {:.2}", m.average_replicas);
    for p in m.replica_spread.iter().take(5) {
        println!(
            "  replica {} sits {:.1} m from its source on average",
            p.replica_index, p.mean_distance_m
        );
    }
    if let Some(&(visits, pct)) = m.efficiency_curve.last() {
        println!("sink collected {pct:.1}% of the data in {visits} node visits");
    }
    Ok(())
}
