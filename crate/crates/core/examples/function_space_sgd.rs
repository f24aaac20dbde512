//! Function-space SGD of a bottleneck network on generated regression data,
//! against the infinite-bottleneck NTK baseline on the same data.

use bntk::data::gen_synthetic_gp;
use bntk::dynamics::{run_training_with, Mode, TrainConfig};

fn main() -> bntk::Result<()> {
    let data = gen_synthetic_gp(200, 100, 10, 1, 3)?;
    for (mode, d) in [(Mode::BottleneckSgd, Some(2)), (Mode::BottleneckSgd, Some(10)), (Mode::InfiniteNtkBaseline, None)] {
        let config = TrainConfig {
            lr: 2000.0,
            loss_scale: 1e-4,
            steps: 300,
            eval_every: 100,
            oracle_width: 2048,
            ..TrainConfig::new(mode, d)
        };
        run_training_with(&config, &data, None, |r| {
            println!("d={:<4} step {:>4}  train {:.5}  test {:.5}", r.width_label(), r.step, r.train_loss, r.test_loss);
        })?;
    }
    Ok(())
}
