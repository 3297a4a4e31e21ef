//! Closed-form neighbor counts against sampled uniform deployments.

use draco_sim::model::FieldGeometry;
use draco_sim::topology::{build_adjacency, deploy_uniform, expected_neighbors_per_node};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let field = FieldGeometry::new(100.0, 100.0).unwrap();
    let alpha = 20.0;
    println!("{:>4} {:>10} {:>10} {:>10}", "N", "expected", "sampled", "connected");
    for n in [20, 50, 100, 150, 200] {
        let mut degree = 0.0;
        let mut connected = 0;
        let trials = 50;
        for seed in 0..trials {
            let layout = deploy_uniform(n, &field, &mut ChaCha8Rng::seed_from_u64(seed));
            let adj = build_adjacency(&layout, alpha);
            degree += adj.mean_degree();
            connected += usize::from(adj.is_connected());
        }
        println!(
            "{n:>4} {:>10.2} {:>10.2} {:>9}%",
            expected_neighbors_per_node(alpha, n, field.area()),
            degree / trials as f64,
            connected * 100 / trials as usize
        );
    }
}
