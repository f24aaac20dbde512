//! Deep linear bottleneck networks and their collapse to a two-layer
//! effective network.
//!
//! With linear activations `F(ξ) = w_eff θ_eff ξ`, where the effective
//! weights are the scaled products of each stack. Gradient flow on the raw
//! weights of a wide stack of depth `L` moves its effective weight like
//! gradient flow on the effective weight itself with an `L` times larger
//! rate.

use std::io::Write;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::activation::Activation;
use crate::error::{check_len, Error, Result};
use crate::finite::{BottleneckNet, Mlp};
use crate::linalg::{self, frobenius};
use crate::rng;

pub const LINEAR_HEADER: [&str; 6] = ["step", "depth_f", "depth_g", "n", "train_loss", "max_rel_dev"];

/// `M_L ⋯ M_1 / √(n^{L−1} fan_in)` for `matrices = [M_1, …, M_L]`.
pub fn effective_weight(matrices: &[Array2<f64>], fan_in: usize, width: usize) -> Result<Array2<f64>> {
    let first = matrices.first().ok_or_else(|| Error::invalid("empty matrix chain"))?;
    check_len("effective weight fan-in", fan_in, first.ncols())?;
    if fan_in == 0 || width == 0 {
        return Err(Error::invalid("fan-in and width must be positive"));
    }
    let mut prod = first.clone();
    for m in &matrices[1..] {
        check_len("effective weight inner width", width, m.ncols())?;
        check_len("effective weight chain", prod.nrows(), m.ncols())?;
        prod = m.dot(&prod);
    }
    let inner = (width as f64).powi(matrices.len() as i32 - 1);
    Ok(prod / (inner * fan_in as f64).sqrt())
}

/// A linear bottleneck network `f ∘ g` with `depth_f`, `depth_g` weight
/// matrices, hidden width `n`, and separate learning rates for both stacks.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepLinearNet {
    pub net: BottleneckNet,
    pub width: usize,
    pub lr_f: f64,
    pub lr_g: f64,
}

impl DeepLinearNet {
    /// Standard normal weights. The matrix of each stack that touches the
    /// bottleneck is multiplied by `init_scale`, so the effective weights are
    /// scaled by `init_scale` whatever the depth while the hidden matrices
    /// keep unit scale.
    #[allow(clippy::too_many_arguments)]
    pub fn random(
        (d0, d, dr): (usize, usize, usize),
        depth_f: usize,
        depth_g: usize,
        width: usize,
        init_scale: f64,
        lrs: (f64, f64),
        seed: u64,
    ) -> Result<Self> {
        if depth_f == 0 || depth_g == 0 {
            return Err(Error::invalid("linear stacks need at least one matrix"));
        }
        if !(init_scale > 0.0) {
            return Err(Error::invalid("init scale must be positive"));
        }
        let dims = |a: usize, b: usize, depth: usize| {
            let mut v = vec![a];
            v.extend(std::iter::repeat_n(width, depth - 1));
            v.push(b);
            v
        };
        let mut rng = rng::stream(seed, 0);
        let mut g = Mlp::random(&dims(d0, d, depth_g), Activation::Linear, 1.0, &mut rng)?;
        let mut f = Mlp::random(&dims(d, dr, depth_f), Activation::Linear, 1.0, &mut rng)?;
        *g.weights.last_mut().expect("depth checked") *= init_scale;
        f.weights[0] *= init_scale;
        Self::new(BottleneckNet::new(g, f)?, width, lrs)
    }

    /// A network of the given depths whose effective weights equal
    /// `theta_eff` and `w_eff` exactly. Hidden matrices are standard normal;
    /// the matrix next to the bottleneck in each stack is the minimum-norm
    /// solution plus standard normal noise orthogonal to the rest of the
    /// product, so it keeps unit scale whatever the effective weights are.
    pub fn with_effective(
        theta_eff: ArrayView2<'_, f64>,
        w_eff: ArrayView2<'_, f64>,
        (depth_f, depth_g): (usize, usize),
        width: usize,
        lrs: (f64, f64),
        seed: u64,
    ) -> Result<Self> {
        if depth_f == 0 || depth_g == 0 {
            return Err(Error::invalid("linear stacks need at least one matrix"));
        }
        let (d, d0) = theta_eff.dim();
        check_len("effective weight chain", d, w_eff.ncols())?;
        let dr = w_eff.nrows();
        let n = width as f64;
        let mut rng = rng::stream(seed, 1);

        let mut g: Vec<Array2<f64>> = Vec::with_capacity(depth_g);
        let theta_target = &theta_eff * (n.powi(depth_g as i32 - 1) * d0 as f64).sqrt();
        if depth_g == 1 {
            g.push(theta_target);
        } else {
            g.push(rng::normal_matrix(&mut rng, width, d0));
            for _ in 2..depth_g {
                g.push(rng::normal_matrix(&mut rng, width, width));
            }
            let below = g.iter().skip(1).fold(g[0].clone(), |acc, m| m.dot(&acc));
            let noise = rng::normal_matrix(&mut rng, d, width);
            let gram_inv = spd_inverse(below.t().dot(&below).view())?;
            let last = (theta_target - noise.dot(&below)).dot(&gram_inv).dot(&below.t()) + &noise;
            g.push(last);
        }

        let mut f_rest: Vec<Array2<f64>> = Vec::with_capacity(depth_f);
        let w_target = &w_eff * (n.powi(depth_f as i32 - 1) * d as f64).sqrt();
        let first = if depth_f == 1 {
            w_target
        } else {
            for _ in 2..depth_f {
                f_rest.push(rng::normal_matrix(&mut rng, width, width));
            }
            f_rest.push(rng::normal_matrix(&mut rng, dr, width));
            let above = f_rest.iter().skip(1).fold(f_rest[0].clone(), |acc, m| m.dot(&acc));
            let noise = rng::normal_matrix(&mut rng, width, d);
            let gram_inv = spd_inverse(above.dot(&above.t()).view())?;
            above.t().dot(&gram_inv).dot(&(w_target - above.dot(&noise))) + &noise
        };
        let mut f = vec![first];
        f.extend(f_rest);
        let net = BottleneckNet::new(
            Mlp::from_weights(g, Activation::Linear)?,
            Mlp::from_weights(f, Activation::Linear)?,
        )?;
        Self::new(net, width, lrs)
    }

    pub fn new(net: BottleneckNet, width: usize, (lr_f, lr_g): (f64, f64)) -> Result<Self> {
        if net.g.activation != Activation::Linear || net.f.activation != Activation::Linear {
            return Err(Error::invalid("deep linear networks need linear activations"));
        }
        if !(lr_f >= 0.0 && lr_g >= 0.0) {
            return Err(Error::invalid("learning rates must be non-negative"));
        }
        Ok(DeepLinearNet { net, width, lr_f, lr_g })
    }

    /// The two-layer network `(w_eff, θ_eff)` with rates `(L_f ε_f, L_g ε_g)`.
    pub fn collapse(&self) -> Result<DeepLinearNet> {
        let theta = self.theta_eff()? * (self.net.input_dim() as f64).sqrt();
        let w = self.w_eff()? * (self.net.bottleneck_dim() as f64).sqrt();
        let net = BottleneckNet::new(
            Mlp::from_weights(vec![theta], Activation::Linear)?,
            Mlp::from_weights(vec![w], Activation::Linear)?,
        )?;
        let (lf, lg) = (self.net.f.depth() as f64, self.net.g.depth() as f64);
        DeepLinearNet::new(net, self.width, (lf * self.lr_f, lg * self.lr_g))
    }

    pub fn depth_f(&self) -> usize {
        self.net.f.depth()
    }

    pub fn depth_g(&self) -> usize {
        self.net.g.depth()
    }

    pub fn w_eff(&self) -> Result<Array2<f64>> {
        effective_weight(&self.net.f.weights, self.net.bottleneck_dim(), self.width)
    }

    pub fn theta_eff(&self) -> Result<Array2<f64>> {
        effective_weight(&self.net.g.weights, self.net.input_dim(), self.width)
    }

    /// `F` on the rows of `x`, computed layer by layer.
    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        Ok(self.net.forward_batch(x)?.1)
    }

    /// One Euler step of gradient flow on `Σ_i ½‖F(ξ_i) − y_i‖²`. Returns
    /// the pre-update loss.
    pub fn gradient_flow_step(&mut self, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<f64> {
        let grads = self.net.gradients(x, y, 1.0)?;
        if !grads.loss.is_finite() {
            return Err(Error::NonFinite("deep linear loss".into()));
        }
        for (w, dw) in self.net.g.weights.iter_mut().zip(&grads.g) {
            w.scaled_add(-self.lr_g, dw);
        }
        for (w, dw) in self.net.f.weights.iter_mut().zip(&grads.f) {
            w.scaled_add(-self.lr_f, dw);
        }
        Ok(grads.loss)
    }
}

fn spd_inverse(m: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let inv = linalg::to_nalgebra(m)
        .cholesky()
        .ok_or_else(|| Error::Degenerate("hidden product is rank deficient".into()))?
        .inverse();
    Ok(linalg::from_nalgebra(&inv))
}

/// Settings shared by the linear experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConfig {
    pub bottleneck: usize,
    pub depth_f: usize,
    pub depth_g: usize,
    pub width: usize,
    pub lr_f: f64,
    pub lr_g: f64,
    pub steps: usize,
    pub init_scale: f64,
    pub seed: u64,
}

impl LinearConfig {
    pub fn new(depth_f: usize, depth_g: usize, width: usize) -> Self {
        LinearConfig {
            bottleneck: 3,
            depth_f,
            depth_g,
            width,
            lr_f: 1e-4,
            lr_g: 1e-4,
            steps: 200,
            init_scale: 1.0,
            seed: 0,
        }
    }

    fn build(&self, d0: usize, dr: usize) -> Result<DeepLinearNet> {
        DeepLinearNet::random(
            (d0, self.bottleneck, dr),
            self.depth_f,
            self.depth_g,
            self.width,
            self.init_scale,
            (self.lr_f, self.lr_g),
            self.seed,
        )
    }
}

/// Training-set outputs of a deep network and of its collapsed two-layer
/// counterpart, recorded before every step and after the last one.
#[derive(Debug, Clone)]
pub struct LinearPairResult {
    pub deep: Vec<Array2<f64>>,
    pub effective: Vec<Array2<f64>>,
    pub deep_loss: Vec<f64>,
    /// `‖F_deep − F_eff‖_F / ‖F_deep‖_F` over the training outputs, per
    /// step.
    pub rel_dev: Vec<f64>,
    pub max_rel_dev: f64,
}

fn half_sq(pred: &Array2<f64>, y: ArrayView2<'_, f64>) -> f64 {
    0.5 * (pred - &y).iter().map(|r| r * r).sum::<f64>()
}

/// Runs gradient flow on the raw weights of the deep network and, from the
/// same starting function, on the effective weights with rates scaled by
/// the depths.
pub fn simulate_linear_pair(cfg: &LinearConfig, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<LinearPairResult> {
    check_len("linear pair targets", x.nrows(), y.nrows())?;
    let mut deep = cfg.build(x.ncols(), y.ncols())?;
    let mut eff = deep.collapse()?;
    let mut out = LinearPairResult {
        deep: Vec::with_capacity(cfg.steps + 1),
        effective: Vec::with_capacity(cfg.steps + 1),
        deep_loss: Vec::with_capacity(cfg.steps + 1),
        rel_dev: Vec::with_capacity(cfg.steps + 1),
        max_rel_dev: 0.0,
    };
    for step in 0..=cfg.steps {
        let fd = deep.forward(x)?;
        let fe = eff.forward(x)?;
        if fd.iter().chain(fe.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("linear trajectory at step {step}")));
        }
        let scale = frobenius(fd.view());
        let dev = if scale > 0.0 { frobenius((&fd - &fe).view()) / scale } else { 0.0 };
        out.max_rel_dev = out.max_rel_dev.max(dev);
        out.rel_dev.push(dev);
        out.deep_loss.push(half_sq(&fd, y));
        out.deep.push(fd);
        out.effective.push(fe);
        if step < cfg.steps {
            deep.gradient_flow_step(x, y)?;
            eff.gradient_flow_step(x, y)?;
        }
    }
    Ok(out)
}

/// Training loss of one deep linear network at every step.
#[derive(Debug, Clone, PartialEq)]
pub struct LossCurve {
    pub depth_f: usize,
    pub depth_g: usize,
    pub width: usize,
    pub losses: Vec<f64>,
}

impl LossCurve {
    /// First step whose loss is at most `fraction` of the initial loss.
    pub fn steps_to(&self, fraction: f64) -> Option<usize> {
        let target = fraction * self.losses.first()?;
        self.losses.iter().position(|&l| l <= target)
    }
}

/// Loss curves of deep linear networks of the given `(depth_f, depth_g)`
/// pairs, all trained with the rates of `base`. Every network starts from
/// the same function: the effective weights of a standard normal two-layer
/// draw scaled by `init_scale`.
pub fn acceleration_probe(
    depths: &[(usize, usize)],
    base: &LinearConfig,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
) -> Result<Vec<LossCurve>> {
    check_len("probe targets", x.nrows(), y.nrows())?;
    if !(base.init_scale > 0.0) {
        return Err(Error::invalid("init scale must be positive"));
    }
    let (d0, d, dr) = (x.ncols(), base.bottleneck, y.ncols());
    let mut r = rng::stream(base.seed, 0);
    let theta = rng::normal_matrix(&mut r, d, d0) * (base.init_scale / (d0 as f64).sqrt());
    let w = rng::normal_matrix(&mut r, dr, d) * (base.init_scale / (d as f64).sqrt());
    depths
        .par_iter()
        .map(|&(depth_f, depth_g)| {
            let mut net = DeepLinearNet::with_effective(
                theta.view(),
                w.view(),
                (depth_f, depth_g),
                base.width,
                (base.lr_f, base.lr_g),
                base.seed,
            )?;
            let mut losses = Vec::with_capacity(base.steps + 1);
            for _ in 0..base.steps {
                losses.push(net.gradient_flow_step(x, y)?);
            }
            losses.push(half_sq(&net.forward(x)?, y));
            Ok(LossCurve {
                depth_f,
                depth_g,
                width: base.width,
                losses,
            })
        })
        .collect()
}

/// One line of the linear-experiment CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub step: usize,
    pub depth_f: usize,
    pub depth_g: usize,
    pub n: usize,
    pub train_loss: f64,
    pub max_rel_dev: Option<f64>,
}

impl LinearRow {
    pub fn from_pair(cfg: &LinearConfig, result: &LinearPairResult) -> Vec<LinearRow> {
        let mut running = 0.0f64;
        result
            .deep_loss
            .iter()
            .zip(&result.rel_dev)
            .enumerate()
            .map(|(step, (&loss, &dev))| {
                running = running.max(dev);
                LinearRow {
                    step,
                    depth_f: cfg.depth_f,
                    depth_g: cfg.depth_g,
                    n: cfg.width,
                    train_loss: loss,
                    max_rel_dev: Some(running),
                }
            })
            .collect()
    }

    pub fn from_curve(curve: &LossCurve) -> Vec<LinearRow> {
        curve
            .losses
            .iter()
            .enumerate()
            .map(|(step, &l)| LinearRow {
                step,
                depth_f: curve.depth_f,
                depth_g: curve.depth_g,
                n: curve.width,
                train_loss: l,
                max_rel_dev: None,
            })
            .collect()
    }
}

pub fn write_linear_csv<W: Write>(out: W, rows: &[LinearRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LINEAR_HEADER)?;
    for r in rows {
        w.write_record([
            r.step.to_string(),
            r.depth_f.to_string(),
            r.depth_g.to_string(),
            r.n.to_string(),
            r.train_loss.to_string(),
            r.max_rel_dev.map_or_else(String::new, |v| v.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn effective_weight_examples() {
        let one = effective_weight(&[array![[3.0]]], 1, 1).unwrap();
        assert_eq!(one, array![[3.0]]);
        let n = 16;
        let w1 = Array2::ones((n, 1));
        let w2 = Array2::ones((1, n));
        let e = effective_weight(&[w1.clone(), w2], 1, n).unwrap();
        assert_abs_diff_eq!(e[[0, 0]], 4.0, epsilon = 1e-12);
        let zero = effective_weight(&[w1, Array2::zeros((2, n))], 1, n).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        assert!(effective_weight(&[Array2::ones((n, 2))], 1, n).is_err());
        assert!(effective_weight(&[], 1, 1).is_err());
    }

    #[test]
    fn collapse_reproduces_outputs() {
        let net = DeepLinearNet::random((4, 2, 3), 3, 2, 20, 1.0, (0.1, 0.1), 5).unwrap();
        let x = rng::normal_matrix(&mut rng::stream(1, 0), 6, 4);
        let flat = net.w_eff().unwrap().dot(&net.theta_eff().unwrap()).dot(&x.t()).reversed_axes();
        let layered = net.forward(x.view()).unwrap();
        for (a, b) in flat.iter().zip(&layered) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        let eff = net.collapse().unwrap();
        assert_abs_diff_eq!(eff.lr_f, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(eff.lr_g, 0.2, epsilon = 1e-15);
        for (a, b) in eff.forward(x.view()).unwrap().iter().zip(&layered) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn init_scale_scales_effective_weights() {
        let a = DeepLinearNet::random((3, 2, 1), 2, 2, 8, 1.0, (0.0, 0.0), 9).unwrap();
        let b = DeepLinearNet::random((3, 2, 1), 2, 2, 8, 0.1, (0.0, 0.0), 9).unwrap();
        let (wa, wb) = (a.w_eff().unwrap(), b.w_eff().unwrap());
        for (p, q) in wa.iter().zip(&wb) {
            assert_abs_diff_eq!(p * 0.1, q, epsilon = 1e-14);
        }
    }

    #[test]
    fn prescribed_effective_weights_are_exact() {
        let mut r = rng::stream(4, 0);
        let theta = rng::normal_matrix(&mut r, 3, 5) * 0.1;
        let w = rng::normal_matrix(&mut r, 2, 3) * 0.1;
        for depths in [(1, 1), (2, 3), (3, 2)] {
            let net = DeepLinearNet::with_effective(theta.view(), w.view(), depths, 40, (0.0, 0.0), 1).unwrap();
            assert_eq!((net.depth_f(), net.depth_g()), depths);
            for (p, q) in net.theta_eff().unwrap().iter().zip(&theta) {
                assert_abs_diff_eq!(*p, *q, epsilon = 1e-10);
            }
            for (p, q) in net.w_eff().unwrap().iter().zip(&w) {
                assert_abs_diff_eq!(*p, *q, epsilon = 1e-10);
            }
            if depths.1 > 1 {
                let last = net.net.g.weights.last().unwrap();
                let rms = (last.iter().map(|v| v * v).sum::<f64>() / last.len() as f64).sqrt();
                assert!(rms > 0.8 && rms < 1.2, "bottleneck-adjacent matrix rms {rms}");
            }
        }
    }

    #[test]
    fn depth_one_pair_is_the_same_algorithm() {
        let mut r = rng::stream(3, 0);
        let x = rng::normal_matrix(&mut r, 10, 4);
        let y = rng::normal_matrix(&mut r, 10, 2);
        let cfg = LinearConfig {
            steps: 30,
            lr_f: 1e-2,
            lr_g: 1e-2,
            ..LinearConfig::new(1, 1, 7)
        };
        let res = simulate_linear_pair(&cfg, x.view(), y.view()).unwrap();
        assert_eq!(res.max_rel_dev, 0.0);
        assert_eq!(res.deep.len(), 31);
        assert!(res.deep_loss[30] < res.deep_loss[0]);
    }

    #[test]
    fn zero_lr_probe_is_flat_and_deterministic() {
        let mut r = rng::stream(4, 0);
        let x = rng::normal_matrix(&mut r, 5, 3);
        let y = rng::normal_matrix(&mut r, 5, 1);
        let cfg = LinearConfig {
            lr_f: 0.0,
            lr_g: 0.0,
            steps: 5,
            ..LinearConfig::new(1, 1, 6)
        };
        let curves = acceleration_probe(&[(1, 1), (2, 2)], &cfg, x.view(), y.view()).unwrap();
        for c in &curves {
            assert!(c.losses.iter().all(|&l| l == c.losses[0]));
        }
        assert_eq!(curves, acceleration_probe(&[(1, 1), (2, 2)], &cfg, x.view(), y.view()).unwrap());
    }

    #[test]
    fn csv_layout() {
        let rows = [LinearRow {
            step: 2,
            depth_f: 2,
            depth_g: 2,
            n: 50,
            train_loss: 0.5,
            max_rel_dev: None,
        }];
        let mut buf = Vec::new();
        write_linear_csv(&mut buf, &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "step,depth_f,depth_g,n,train_loss,max_rel_dev\n2,2,2,50,0.5,\n");
    }
}
