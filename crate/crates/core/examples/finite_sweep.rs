//! Four-layer finite networks trained with batch-5 SGD on an MNIST subset
//! for several bottleneck widths.

use bntk::activation::Activation;
use bntk::data::{load_mnist_dir, Normalization};
use bntk::finite::{sweep_bottleneck, SweepConfig};

fn main() -> bntk::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/mnist-5k").into());
    let mut data = load_mnist_dir(dir, Some(1000), Some(200))?;
    data.normalize(Normalization::UnitPixels);

    let config = SweepConfig {
        widths: vec![1, 4, 16, 64, 256],
        hidden: 512,
        activation: Activation::Relu,
        lr: 25.0,
        batch_size: 5,
        steps: 1000,
        eval_every: 0,
        loss_scale: 1.0 / (5.0 * 10.0),
        seed: 0,
    };
    for run in sweep_bottleneck(&config, &data)? {
        let last = run.final_row();
        println!("d={:<4} train {:.4}  test {:.4}  test error {:.3}", run.width, last.train_loss, last.test_loss, 1.0 - last.test_acc);
    }
    Ok(())
}
