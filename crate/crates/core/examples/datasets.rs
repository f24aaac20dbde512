//! Loading the bundled MNIST subset, normalizing inputs, and generating
//! the synthetic regression sets.

use bntk::data::{gen_projection_problem, gen_synthetic_gp, load_mnist_dir, Normalization};

fn main() -> bntk::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/mnist-5k");
    let mut mnist = load_mnist_dir(dir, None, None)?;
    println!("mnist: {} train, {} test, d0 = {}, classes = {}", mnist.n_train(), mnist.n_test(), mnist.input_dim(), mnist.output_dim());
    let mean_sq = |x: &ndarray::Array2<f64>| x.iter().map(|v| v * v).sum::<f64>() / x.nrows() as f64;
    println!("mean ‖ξ‖² as loaded: {:.2}", mean_sq(&mnist.train_x));
    mnist.normalize(Normalization::MeanSqNorm);
    println!("after mean_sq_norm: {:.2}", mean_sq(&mnist.train_x));

    let gp = gen_synthetic_gp(300, 100, 10, 2, 1)?;
    let var = gp.train_y.iter().map(|v| v * v).sum::<f64>() / gp.train_y.len() as f64;
    println!("deep-GP targets: {} × {}, mean square {var:.3}", gp.train_y.nrows(), gp.train_y.ncols());

    let proj = gen_projection_problem(100, 0, 5, 2, 0)?;
    println!("projection targets for the first input: {:.4}", proj.train_y.row(0));

    let out = std::env::temp_dir().join("bntk_synthetic");
    std::fs::create_dir_all(&out)?;
    gp.export_csv(&out, "synthetic")?;
    println!("wrote {}", out.display());
    Ok(())
}
