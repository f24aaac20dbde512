//! One function-space SGD step on a width-one linear network, small enough
//! to check by hand: g₀(ξ) = 2ξ, f₀(x) = 3x, ξ = 1, y = 0, lr = 0.1.

use bntk::activation::Activation;
use bntk::dynamics::{FunctionState, Integrator, Kernels, Points};
use bntk::finite::Mlp;
use bntk::kernels::KernelConfig;
use bntk::oracle::WideNetSnapshot;
use ndarray::array;

fn main() -> bntk::Result<()> {
    let snapshot = WideNetSnapshot {
        g: Mlp::from_weights(vec![array![[2.0]]], Activation::Linear)?,
        f: Mlp::from_weights(vec![array![[1.0]], array![[3.0]]], Activation::Linear)?,
        width: 1,
        seed: 0,
    };
    let kernels = Kernels {
        theta: KernelConfig::linear(1, 1),
        k: KernelConfig::linear(1, 1),
    };
    let x = array![[1.0]];
    let mut state = FunctionState::new(snapshot, kernels, x.view(), x.view(), 0.1, 1.0, Integrator::Sgd)?;

    println!("t=0  g = {}  J = {}  F = {}", state.train_g()[[0, 0]], state.eval_j(&[2.0])?[[0, 0]], state.eval_f(Points::Train)?[[0, 0]]);
    state.sgd_step(&[0], array![[0.0]].view())?;
    let g1 = state.train_g()[[0, 0]];
    println!("t=1  g = {g1:.4}  J = {:.4}  F = {:.4}", state.eval_j(&[g1])?[[0, 0]], state.eval_f(Points::Train)?[[0, 0]]);
    println!("expected g = 0.2, J = 1.8, F = 5.76");
    Ok(())
}
