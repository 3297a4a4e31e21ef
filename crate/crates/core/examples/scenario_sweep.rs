//! Runs a scenario (a preset name or a scenario file) and prints mean availability.
//!
//! `cargo run --release --example scenario_sweep -- smoke`

use draco_sim::experiments::{builtin_scenario, run_scenario, Scenario};

fn main() -> draco_sim::Result<()> {
    let arg = std::env::args().nth(1).unwrap_or_else(|| "smoke".into());
    let scenario = match builtin_scenario(&arg) {
        Some(s) => s,
        None => Scenario::from_text(&std::fs::read_to_string(&arg)?)?,
    };
    println!("{}: {} runs", scenario.name, scenario.run_count());
    let results = run_scenario(&scenario, 0)?;
    for point in scenario.points() {
        let a = results.availability(&point);
        let r = results.replicas(&point);
        println!(
            "{:6} N={:<4} R={} F={:<4} availability {:.4}±{:.4} replicas {:.2}",
            point.strategy.as_str(),
            point.node_count,
            point.degree,
            point.fraction,
            a.mean,
            a.std_err,
            r.mean
        );
    }
    Ok(())
}
