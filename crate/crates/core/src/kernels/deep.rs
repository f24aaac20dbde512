//! Layerwise NNGP/NTK recursion for deeper MLPs.
//!
//! Pre-activations of layer `l + 1` are `W φ(h_l) / sqrt(n)`. Passing through
//! a ReLU layer maps the covariance `(Σ, Θ)` of `h_l` to
//! `Σ' = √(Σ_aa Σ_bb) · shape(λ)` and `Θ' = Θ · Σ̇(λ) + Σ'`; a linear layer
//! maps it to `(Σ, Θ + Σ)`. The first layer starts from `xᵀx̃ / d₀`.

use super::{arccos_shape, arccos_slope, check_dim, pair_geometry, KernelActivation, KernelConfig};
use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, norm};

#[derive(Debug, Clone, Copy)]
struct PairState {
    cov_aa: f64,
    cov_bb: f64,
    cov_ab: f64,
    ntk_ab: f64,
}

impl PairState {
    fn through(self, activation: KernelActivation) -> Self {
        match activation {
            KernelActivation::Linear => PairState {
                ntk_ab: self.ntk_ab + self.cov_ab,
                ..self
            },
            KernelActivation::Relu => {
                let scale = (self.cov_aa * self.cov_bb).sqrt();
                let (cov_ab, slope) = if scale > 0.0 {
                    let lam = (self.cov_ab / scale).clamp(-1.0, 1.0);
                    (scale * arccos_shape(lam), arccos_slope(lam))
                } else {
                    (0.0, 0.25)
                };
                PairState {
                    cov_aa: 0.5 * self.cov_aa,
                    cov_bb: 0.5 * self.cov_bb,
                    cov_ab,
                    ntk_ab: self.ntk_ab * slope + cov_ab,
                }
            }
        }
    }
}

/// `(Θ, Σ)` of a ReLU MLP with `hidden` hidden layers at the output.
///
/// The first transition is evaluated from the raw vectors exactly as the
/// shallow formula does, so `hidden = 1` reproduces it bit for bit.
pub(crate) fn relu_recursion(
    dot_ab: f64,
    norm_a: f64,
    norm_b: f64,
    input_dim: usize,
    hidden: usize,
    eps: f64,
) -> (f64, f64) {
    let d = input_dim as f64;
    if hidden == 0 {
        return (dot_ab / d, dot_ab / d);
    }
    let geom = super::PairGeometry::from_parts(dot_ab, norm_a, norm_b, eps);
    let sigma = if geom.d_prod == 0.0 {
        0.0
    } else {
        geom.d_prod / d * arccos_shape(geom.cosine)
    };
    let mut state = PairState {
        cov_aa: 0.5 * norm_a * norm_a / d,
        cov_bb: 0.5 * norm_b * norm_b / d,
        cov_ab: sigma,
        ntk_ab: dot_ab / d * arccos_slope(geom.cosine) + sigma,
    };
    for _ in 1..hidden {
        state = state.through(KernelActivation::Relu);
    }
    (state.ntk_ab, state.cov_ab)
}

/// NTK of a ReLU MLP with `depth` hidden layers (`depth = 1` is the shallow
/// kernel).
pub fn ntk_relu_deep(a: &[f64], b: &[f64], input_dim: usize, depth: usize) -> Result<f64> {
    check_dim(input_dim)?;
    if depth == 0 {
        return Err(Error::invalid("depth must be at least 1"));
    }
    let g = pair_geometry(a, b, super::DEFAULT_EPS_CLAMP)?;
    Ok(relu_recursion(g.dot, g.norm_a, g.norm_b, input_dim, depth, super::DEFAULT_EPS_CLAMP).0)
}

/// `(NTK, NNGP)` of `f ∘ g` once the bottleneck width goes to infinity.
///
/// The bottleneck becomes an ordinary (linear) hidden layer: `g`'s output
/// covariance feeds `f`'s first pre-activation directly.
pub fn ntk_infinite_bottleneck(a: &[f64], b: &[f64], g: &KernelConfig, f: &KernelConfig) -> Result<(f64, f64)> {
    check_len("ntk_infinite_bottleneck", a.len(), b.len())?;
    g.validate()?;
    f.validate()?;
    Ok(infinite_bottleneck_scalar(dot(a, b), norm(a), norm(b), g, f))
}

pub(crate) fn infinite_bottleneck_scalar(
    dot_ab: f64,
    norm_a: f64,
    norm_b: f64,
    g: &KernelConfig,
    f: &KernelConfig,
) -> (f64, f64) {
    let d0 = g.input_dim as f64;
    let mut state = PairState {
        cov_aa: norm_a * norm_a / d0,
        cov_bb: norm_b * norm_b / d0,
        cov_ab: dot_ab / d0,
        ntk_ab: dot_ab / d0,
    };
    for _ in 1..g.depth {
        state = state.through(g.activation);
    }
    state = state.through(KernelActivation::Linear);
    for _ in 1..f.depth {
        state = state.through(f.activation);
    }
    (state.ntk_ab, state.cov_ab)
}
