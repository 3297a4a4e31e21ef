//! Data availability as the failed fraction of nodes grows, per replication degree.

use draco_sim::experiments::{run_point, Summary};
use draco_sim::SimConfig;

fn main() -> draco_sim::Result<()> {
    let fractions = [0.0, 0.1, 0.2, 0.5, 0.7];
    print!("{:>3}", "R");
    for f in fractions {
        print!("  F={f:<4}");
    }
    println!();
    for r in [1, 2, 3, 5] {
        print!("{r:>3}");
        for f in fractions {
            let cfg = SimConfig {
                replication_degree: r,
                failure_fraction: f,
                collection_strategy: None,
                ..SimConfig::default()
            };
            let values: Vec<f64> = (0..8)
                .map(|s| run_point(&cfg, s, &[]).map(|(row, _)| row.data_availability))
                .collect::<Result<_, _>>()?;
            print!("  {:.4}", Summary::of(&values).mean);
        }
        println!();
    }
    Ok(())
}
