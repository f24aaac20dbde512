//! Manual backpropagation of a four-layer bottleneck network checked
//! against central finite differences of the loss.

use bntk::activation::Activation;
use bntk::finite::{BottleneckNet, MlpSpec};
use bntk::rng;

fn main() -> bntk::Result<()> {
    let mut net = BottleneckNet::init(&MlpSpec::four_layer(4, 16, 3, 2, Activation::Softplus { sharpness: 4.0 }, 2))?;
    let mut r = rng::stream(2, 9);
    let x = rng::normal_matrix(&mut r, 5, 4);
    let y = rng::normal_matrix(&mut r, 5, 2);
    let grads = net.gradients(x.view(), y.view(), 1.0)?;
    let analytic: Vec<f64> = grads.g.iter().chain(&grads.f).flat_map(|m| m.iter().copied()).collect();

    let h = 1e-5;
    let mut worst = 0.0f64;
    let total = analytic.len();
    for k in (0..total).step_by(total / 40) {
        let bump = |net: &mut BottleneckNet, delta: f64| {
            let mut seen = 0;
            for m in net.parameters_mut() {
                if k < seen + m.len() {
                    let v = m.iter_mut().nth(k - seen).expect("in range");
                    *v += delta;
                    return;
                }
                seen += m.len();
            }
        };
        bump(&mut net, h);
        let up = net.gradients(x.view(), y.view(), 1.0)?.loss;
        bump(&mut net, -2.0 * h);
        let down = net.gradients(x.view(), y.view(), 1.0)?.loss;
        bump(&mut net, h);
        let numeric = (up - down) / (2.0 * h);
        let rel = (numeric - analytic[k]).abs() / numeric.abs().max(analytic[k].abs()).max(1e-8);
        worst = worst.max(rel);
    }
    println!("checked 40 of {total} parameters, worst relative error {worst:.2e}");
    Ok(())
}
