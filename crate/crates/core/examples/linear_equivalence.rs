//! A deep linear bottleneck network tracks its collapsed two-layer network
//! trained with depth-scaled rates, and deeper stacks reach a loss target
//! sooner from the same starting function.

use bntk::data::gen_projection_problem;
use bntk::linear::{acceleration_probe, simulate_linear_pair, LinearConfig};

fn main() -> bntk::Result<()> {
    let data = gen_projection_problem(100, 0, 5, 2, 0)?;
    let (x, y) = (data.train_x.view(), data.train_y.view());

    for width in [500, 2000, 4000] {
        let mut devs = Vec::new();
        for seed in 0..3 {
            let cfg = LinearConfig { seed, ..LinearConfig::new(2, 2, width) };
            devs.push(simulate_linear_pair(&cfg, x, y)?.max_rel_dev);
        }
        let mean = devs.iter().sum::<f64>() / devs.len() as f64;
        println!("n={width:<5} max relative deviation from the collapsed net {devs:.4?}, mean {mean:.4}");
    }

    let base = LinearConfig {
        init_scale: 0.1,
        steps: 2000,
        ..LinearConfig::new(1, 1, 500)
    };
    for curve in acceleration_probe(&[(1, 1), (2, 2), (3, 3)], &base, x, y)? {
        let hit = curve.steps_to(0.1).map_or("never".to_string(), |s| s.to_string());
        println!("depths ({}, {}): 10% of the initial loss at step {hit}", curve.depth_f, curve.depth_g);
    }
    Ok(())
}
