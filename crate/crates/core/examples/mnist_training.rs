//! A short MNIST run: bottleneck widths 10 and 100 against the infinite
//! baseline with the mnist preset (lr 250, batch 20, [0, 1] pixels, loss
//! averaged over batch and classes).

use bntk::data::{load_mnist_dir, Normalization};
use bntk::dynamics::{run_training_with, Mode, TrainConfig};

fn main() -> bntk::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/mnist-5k").into());
    let mut data = load_mnist_dir(dir, Some(500), Some(200))?;
    data.normalize(Normalization::UnitPixels);

    for (mode, d) in [(Mode::BottleneckSgd, Some(10)), (Mode::BottleneckSgd, Some(100)), (Mode::InfiniteNtkBaseline, None)] {
        let config = TrainConfig {
            steps: 300,
            eval_every: 100,
            loss_scale: 1.0 / (20.0 * 10.0),
            oracle_width: 2048,
            ..TrainConfig::new(mode, d)
        };
        run_training_with(&config, &data, None, |r| {
            println!(
                "d={:<4} step {:>4}  train {:.4}  test {:.4}  test acc {:.3}",
                r.width_label(),
                r.step,
                r.train_loss,
                r.test_loss,
                r.test_acc
            );
        })?;
    }
    Ok(())
}
