//! DRACO, Greedy and Random replication side by side at one operating point.

use draco_sim::experiments::{run_point, Summary};
use draco_sim::replication::ReplicationStrategyKind;
use draco_sim::SimConfig;

const SEEDS: u64 = 10;

fn main() -> draco_sim::Result<()> {
    println!("{:8} {:>13} {:>9} {:>12}", "strategy", "availability", "replicas", "2nd copy (m)");
    for strategy in ReplicationStrategyKind::ALL {
        let cfg = SimConfig {
            replication_strategy: strategy,
            replication_degree: 3,
            failure_fraction: 0.5,
            collection_strategy: None,
            ..SimConfig::default()
        };
        let mut avail = Vec::new();
        let mut reps = Vec::new();
        let mut spread = Vec::new();
        for seed in 0..SEEDS {
            let (row, _) = run_point(&cfg, seed, &[])?;
            avail.push(row.data_availability);
            reps.push(row.average_replicas);
            if let Some(p) = row.replica_spread.get(1) {
                spread.push(p.mean_distance_m);
            }
        }
        let a = Summary::of(&avail);
        println!(
            "{:8} {:>7.4}±{:.4} {:>9.2} {:>12.1}",
            strategy.as_str(),
            a.mean,
            a.std_err,
            Summary::of(&reps).mean,
            Summary::of(&spread).mean
        );
    }
    Ok(())
}
