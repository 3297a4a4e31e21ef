//! The three sink strategies collecting from one disseminated network.

use draco_sim::collection::SinkStrategyKind;
use draco_sim::experiments::run_point;
use draco_sim::metrics::{percent_at, visits_to_reach};
use draco_sim::SimConfig;

fn main() -> draco_sim::Result<()> {
    let cfg = SimConfig {
        replication_degree: 5,
        failure_fraction: 0.2,
        ..SimConfig::default()
    };
    let (row, _) = run_point(&cfg, 7, &SinkStrategyKind::ALL)?;
    println!("{} unique items, availability {:.3}", row.total_unique, row.data_availability);
    println!("{:6} {:>8} {:>8} {:>8} {:>10}", "sink", "@10", "@25", "@50", "80% after");
    for (sink, curve) in &row.efficiency {
        let v80 = visits_to_reach(curve, 80.0).map_or_else(|| "never".to_string(), |v| v.to_string());
        println!(
            "{:6} {:>7.1}% {:>7.1}% {:>7.1}% {:>10}",
            sink.as_str(),
            percent_at(curve, 10),
            percent_at(curve, 25),
            percent_at(curve, 50),
            v80
        );
    }
    Ok(())
}
