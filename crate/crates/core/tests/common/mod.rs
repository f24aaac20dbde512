#![allow(dead_code)]

use bntk::kernels::{sigma_grad_kernels, KernelActivation, KernelConfig};
use bntk::rng;
use rand::Rng;
use rand_distr::StandardNormal;

/// Sample mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Per-sample values of `relu(u) relu(v)`, `1[u > 0] 1[v > 0]` and the
/// one-hidden-layer NTK integrand, with `u = wᵀa/√d`, `v = wᵀb/√d`.
pub fn relu_mc_samples(a: &[f64], b: &[f64], samples: usize, seed: u64) -> [Vec<f64>; 3] {
    let d = a.len() as f64;
    let ab = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / d;
    let mut r = rng::stream(seed, 77);
    let mut out = [Vec::with_capacity(samples), Vec::with_capacity(samples), Vec::with_capacity(samples)];
    for _ in 0..samples {
        let (mut u, mut v) = (0.0, 0.0);
        for k in 0..a.len() {
            let w: f64 = r.sample(StandardNormal);
            u += w * a[k];
            v += w * b[k];
        }
        let (u, v) = (u / d.sqrt(), v / d.sqrt());
        let s = u.max(0.0) * v.max(0.0);
        let sd = if u > 0.0 && v > 0.0 { 1.0 } else { 0.0 };
        out[0].push(s);
        out[1].push(sd);
        out[2].push(ab * sd + s);
    }
    out
}

/// Random input pair in `dim` dimensions with cosine inside `[-max_cos, max_cos]`.
pub fn bounded_pair(dim: usize, max_cos: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng::stream(seed, 5);
    loop {
        let a = rng::normal_vec(&mut r, dim);
        let b = rng::normal_vec(&mut r, dim);
        let cos = bntk::linalg::dot(&a, &b) / (bntk::linalg::norm(&a) * bntk::linalg::norm(&b));
        if cos.abs() <= max_cos {
            return (a, b);
        }
    }
}

/// Central difference gradient of `f` at `x`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            let mut p = x.to_vec();
            p[k] += h;
            let up = f(&p);
            p[k] -= 2.0 * h;
            let down = f(&p);
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Relative errors of Ξ, Σ₍₁₎ and Σ₍₂₎ against finite differences of the
/// one-hidden-layer ReLU kernels.
pub fn kernel_derivative_errors(a: &[f64], b: &[f64]) -> [f64; 3] {
    let d = a.len();
    let cfg = KernelConfig::relu(d);
    let h = 1e-5;
    let xi = cfg.xi(a, b).unwrap();
    let xi_fd = fd_gradient(|p| cfg.ntk(p, b).unwrap(), a, h);
    let (s1, s2) = sigma_grad_kernels(a, b, d, KernelActivation::Relu).unwrap();
    let s1_fd = fd_gradient(|q| cfg.nngp(a, q).unwrap(), b, h);
    let mut s2_fd = Vec::with_capacity(d * d);
    for beta in 0..d {
        let partial = |t: f64| {
            let mut q = a.to_vec();
            q[beta] += t;
            sigma_grad_kernels(&q, b, d, KernelActivation::Relu).unwrap().0
        };
        let (up, down) = (partial(h), partial(-h));
        s2_fd.extend(up.iter().zip(&down).map(|(u, v)| (u - v) / (2.0 * h)));
    }
    let s2_flat: Vec<f64> = s2.iter().copied().collect();
    [max_rel_err(&xi, &xi_fd), max_rel_err(&s1, &s1_fd), max_rel_err(&s2_flat, &s2_fd)]
}
