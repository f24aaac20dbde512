//! Initialization of an infinitely wide bottleneck network: a wide
//! snapshot for g and f, a GP draw from the NNGP, and the Jacobian of f.

use bntk::activation::Activation;
use bntk::kernels::KernelConfig;
use bntk::oracle::{gp_sample, init_wide_net};
use bntk::rng;

fn main() -> bntk::Result<()> {
    let (d0, d, dr) = (4, 3, 2);
    let snap = init_wide_net((d0, d, dr), 2, Activation::Relu, 4096, 11)?;
    let x = rng::normal_matrix(&mut rng::stream(11, 5), 6, d0);

    let (g, f) = snap.eval_batch(x.view())?;
    println!("g(ξ) at init:\n{g:.4}\nF(ξ) at init:\n{f:.4}");

    let j = snap.jacobian(&g.row(0).to_vec())?;
    println!("J(g(ξ₀)), {}×{}:\n{j:.4}", j.nrows(), j.ncols());

    // Same point set, exact GP prior instead of a finite-width proxy.
    let nngp = KernelConfig::relu(d0);
    let draw = gp_sample(|a, b| nngp.nngp(a, b), x.view(), d, 3, 0.0)?;
    println!("GP draw of a {d}-dim bottleneck (jitter {:.1e}):\n{:.4}", draw.chol_jitter, draw.values);
    Ok(())
}
