//! Saves a function-space state mid-run, reloads it with its
//! initialization snapshot and continues; both copies stay identical.

use bntk::activation::Activation;
use bntk::data::gen_synthetic_gp;
use bntk::dynamics::{FunctionState, Integrator, Kernels, Points};
use bntk::oracle::{init_wide_net, WideNetSnapshot};
use bntk::rng::BatchSampler;
use ndarray::Axis;

fn main() -> bntk::Result<()> {
    let data = gen_synthetic_gp(60, 20, 5, 1, 8)?;
    let snapshot = init_wide_net((5, 3, 1), 2, Activation::Relu, 1024, 8)?;
    let kernels = Kernels::for_snapshot(&snapshot)?;
    let mut state = FunctionState::new(snapshot, kernels, data.train_x.view(), data.test_x.view(), 50.0, 0.01, Integrator::Sgd)?;
    let mut batches = BatchSampler::new(data.n_train(), 10, 8, 1);
    let step = |s: &mut FunctionState, b: &[usize]| s.sgd_step(b, data.train_y.select(Axis(0), b).view());

    for _ in 0..20 {
        let b = batches.next_batch();
        step(&mut state, &b)?;
    }
    let dir = std::env::temp_dir();
    state.save(dir.join("bntk_example.fsd1"))?;
    state.oracle().save(dir.join("bntk_example.wns1"))?;
    let mut resumed = FunctionState::load(dir.join("bntk_example.fsd1"), WideNetSnapshot::load(dir.join("bntk_example.wns1"))?)?;

    for _ in 0..20 {
        let b = batches.next_batch();
        step(&mut state, &b)?;
        step(&mut resumed, &b)?;
    }
    let gap = (&state.eval_f(Points::Test)? - &resumed.eval_f(Points::Test)?).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    println!("after {} steps the resumed state differs by {gap:e}", resumed.step());
    Ok(())
}
