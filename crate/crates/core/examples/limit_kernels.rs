//! Closed-form ReLU kernels for a few input pairs, next to the empirical
//! tangent kernel of one wide finite network.

use bntk::activation::Activation;
use bntk::finite::{BottleneckNet, MlpSpec};
use bntk::kernels::{sigma_grad_kernels, KernelActivation, KernelConfig};

fn main() -> bntk::Result<()> {
    let d = 3;
    let relu = KernelConfig::relu(d);
    let pairs = [
        ([1.0, 0.0, 0.5], [0.2, 1.0, -0.3]),
        ([1.0, 1.0, 1.0], [1.0, 1.0, 1.0]),
        ([0.5, -1.0, 2.0], [-0.5, 1.0, -2.0]),
    ];

    // f: one hidden ReLU layer on the 3-dim bottleneck.
    let wide = BottleneckNet::init(&MlpSpec::four_layer(2, 20_000, d, 1, Activation::Relu, 7))?;

    println!("{:>4} {:>10} {:>10} {:>10}", "pair", "Σ", "K", "K_emp");
    for (i, (a, b)) in pairs.iter().enumerate() {
        let sigma = relu.nngp(a, b)?;
        let k = relu.ntk(a, b)?;
        let k_emp = wide.empirical_ntk_f(a, b)?[[0, 0]];
        println!("{i:>4} {sigma:>10.5} {k:>10.5} {k_emp:>10.5}");
    }

    let (a, b) = &pairs[0];
    println!("\nΞ(x, x̃)  = {:.5?}", relu.xi(a, b)?);
    let (s1, s2) = sigma_grad_kernels(a, b, d, KernelActivation::Relu)?;
    println!("Σ₁(x, x̃) = {s1:.5?}");
    println!("Σ₂(x, x̃) =\n{s2:.5}");

    let lin = KernelConfig::linear(d, 3);
    println!("\nNTK of a depth-3 linear stack on the first pair: {:.5}", lin.ntk(a, b)?);
    Ok(())
}
