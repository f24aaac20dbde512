//! Closed-form limit kernels of wide ReLU and linear MLPs.
//!
//! All kernels use the un-gained normalization in which a layer of width `d`
//! sees pre-activations `W x / sqrt(d)` with standard normal `W`. For a pair
//! `(x, x̃)` write `D = |x| |x̃|` and `λ = xᵀx̃ / D`. Then
//!
//! ```text
//! Σ(x, x̃)  = D/d · (λ(π − arccos λ) + √(1 − λ²)) / 2π      (NNGP of one ReLU layer)
//! Σ̇(x, x̃) = (π − arccos λ) / 2π
//! K(x, x̃)  = xᵀx̃/d · Σ̇ + Σ                                  (NTK of a one-hidden-layer MLP)
//! Ξ(x, x̃)  = ∂K/∂x
//! ```
//!
//! `Σ₍₁₎` and `Σ₍₂₎` are the first and mixed second derivatives of `Σ`; they
//! are the cross-covariance of `(f, J)` and the covariance of Jacobian rows.
//!
//! Every function here is pure.

mod deep;

pub use deep::{ntk_infinite_bottleneck, ntk_relu_deep};
pub(crate) use deep::infinite_bottleneck_scalar;

use std::f64::consts::PI;

use ndarray::Array2;

use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, norm};

/// Default margin keeping `|λ| ≤ 1 − ε` away from the arccos singularity.
pub const DEFAULT_EPS_CLAMP: f64 = 1e-7;

const COSINE_SNAP: f64 = 4.0 * f64::EPSILON;

/// Cached norms and cosine of a pair of vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairGeometry {
    pub dot: f64,
    pub norm_a: f64,
    pub norm_b: f64,
    /// `norm_a * norm_b`
    pub d_prod: f64,
    /// Cosine, clamped into `[−1 + ε, 1 − ε]`; zero when either norm vanishes.
    pub lambda: f64,
    /// Cosine clipped only to `[−1, 1]`, used where the formulas stay finite.
    pub cosine: f64,
}

impl PairGeometry {
    /// Geometry from precomputed dot product and norms.
    #[inline]
    pub fn from_parts(dot: f64, norm_a: f64, norm_b: f64, eps_clamp: f64) -> Self {
        let d_prod = norm_a * norm_b;
        let cosine = if d_prod > 0.0 {
            debug_assert!(dot.abs() <= d_prod * (1.0 + 1e-9) + 1e-300);
            let c = dot / d_prod;
            // a few ulps of rounding in `dot` or `d_prod` would otherwise
            // move arccos by ~1e-8 on the diagonal
            if 1.0 - c.abs() <= COSINE_SNAP {
                c.signum()
            } else {
                c
            }
        } else {
            0.0
        };
        let lambda = cosine.clamp(-1.0 + eps_clamp, 1.0 - eps_clamp);
        PairGeometry {
            dot,
            norm_a,
            norm_b,
            d_prod,
            lambda,
            cosine,
        }
    }

    /// `√(1 − λ²)` of the clamped cosine.
    #[inline]
    pub fn sine(&self) -> f64 {
        (1.0 - self.lambda * self.lambda).sqrt()
    }
}

/// Builds the [`PairGeometry`] of `(a, b)`.
pub fn pair_geometry(a: &[f64], b: &[f64], eps_clamp: f64) -> Result<PairGeometry> {
    check_len("pair_geometry", a.len(), b.len())?;
    if a.is_empty() {
        return Err(Error::invalid("pair_geometry needs non-empty vectors"));
    }
    check_eps(eps_clamp)?;
    Ok(PairGeometry::from_parts(dot(a, b), norm(a), norm(b), eps_clamp))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1e-3) {
        return Err(Error::invalid(format!("eps_clamp must lie in (0, 1e-3), got {eps}")));
    }
    Ok(())
}

fn check_dim(input_dim: usize) -> Result<()> {
    if input_dim == 0 {
        return Err(Error::invalid("input_dim must be positive"));
    }
    Ok(())
}

/// `(λ(π − arccos λ) + √(1 − λ²)) / 2π`, the normalized arc-cosine kernel.
#[inline]
pub(crate) fn arccos_shape(lambda: f64) -> f64 {
    (lambda * (PI - lambda.acos()) + (1.0 - lambda * lambda).sqrt()) / (2.0 * PI)
}

/// `(π − arccos λ) / 2π`
#[inline]
pub(crate) fn arccos_slope(lambda: f64) -> f64 {
    (PI - lambda.acos()) / (2.0 * PI)
}

#[inline]
fn sigma_from_geometry(geom: &PairGeometry, input_dim: usize) -> f64 {
    if geom.d_prod == 0.0 {
        return 0.0;
    }
    geom.d_prod / input_dim as f64 * arccos_shape(geom.cosine)
}

/// ReLU NNGP kernel `Σ`. Zero when either input vanishes.
pub fn sigma_relu(geom: &PairGeometry, input_dim: usize) -> Result<f64> {
    check_dim(input_dim)?;
    Ok(sigma_from_geometry(geom, input_dim))
}

/// Derivative kernel `Σ̇ = E[φ'(a)φ'(b)]`, in `[0, 1/2]`.
pub fn sigma_dot_relu(geom: &PairGeometry) -> f64 {
    arccos_slope(geom.cosine)
}

/// One-hidden-layer ReLU NTK. With `input_dim = d₀` this is `Θ`, with the
/// bottleneck width `d` it is `K`.
pub fn ntk_relu_shallow(a: &[f64], b: &[f64], input_dim: usize) -> Result<f64> {
    check_dim(input_dim)?;
    let geom = pair_geometry(a, b, DEFAULT_EPS_CLAMP)?;
    Ok(relu_ntk_from_geometry(&geom, input_dim))
}

#[inline]
pub(crate) fn relu_ntk_from_geometry(geom: &PairGeometry, input_dim: usize) -> f64 {
    geom.dot / input_dim as f64 * arccos_slope(geom.cosine) + sigma_from_geometry(geom, input_dim)
}

/// `Ξ(x, x̃) = ∂K(x, x̃)/∂x` for the one-hidden-layer ReLU NTK.
///
/// Fails on a vanishing `x` or `x̃`: the formula divides by `|x|²` and `D`.
pub fn xi_relu(a: &[f64], b: &[f64], input_dim: usize) -> Result<Vec<f64>> {
    xi_relu_with_eps(a, b, input_dim, DEFAULT_EPS_CLAMP)
}

pub fn xi_relu_with_eps(a: &[f64], b: &[f64], input_dim: usize, eps_clamp: f64) -> Result<Vec<f64>> {
    check_dim(input_dim)?;
    let g = pair_geometry(a, b, eps_clamp)?;
    if g.d_prod == 0.0 {
        return Err(Error::Degenerate("Ξ evaluated at a zero-norm embedding".into()));
    }
    let d = input_dim as f64;
    let slope = arccos_slope(g.cosine);
    let sigma = sigma_from_geometry(&g, input_dim);
    let na2 = g.norm_a * g.norm_a;
    let curvature = 1.0 / (2.0 * PI * g.sine());
    Ok(a
        .iter()
        .zip(b)
        .map(|(&xa, &xb)| {
            let tangent = xb / g.d_prod - g.lambda * xa / na2;
            xb / d * slope
                + g.dot / d * curvature * tangent
                + g.d_prod / d * slope * tangent
                + xa * g.norm_b / (g.norm_a * g.d_prod) * sigma
        })
        .collect())
}

/// Coefficients `(c_b, c_a)` with `Ξ(a, b) = c_b·b + c_a·a`, from the same
/// four terms as [`xi_relu`]. Used on the hot path of the trainer.
#[inline]
pub(crate) fn relu_xi_coefficients(g: &PairGeometry, input_dim: usize) -> (f64, f64) {
    let (_, c_b, c_a) = relu_ntk_xi(g, input_dim);
    (c_b, c_a)
}

/// `(K, c_b, c_a)` for one pair, evaluating the arccos once.
#[inline]
pub(crate) fn relu_ntk_xi(g: &PairGeometry, input_dim: usize) -> (f64, f64, f64) {
    let d = input_dim as f64;
    let angle = g.cosine.acos();
    let slope = (PI - angle) / (2.0 * PI);
    let sigma = g.d_prod / d * (g.cosine * (PI - angle) + (1.0 - g.cosine * g.cosine).sqrt()) / (2.0 * PI);
    let ntk = g.dot / d * slope + sigma;
    let na2 = g.norm_a * g.norm_a;
    let curvature = 1.0 / (2.0 * PI * g.sine());
    let tangent_scale = g.dot / d * curvature + g.d_prod / d * slope;
    let c_b = slope / d + tangent_scale / g.d_prod;
    let c_a = -tangent_scale * g.lambda / na2 + g.norm_b / (g.norm_a * g.d_prod) * sigma;
    (ntk, c_b, c_a)
}

/// Activation whose limit kernels have closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelActivation {
    Relu,
    Linear,
}

/// `Σ₍₁₎(x, x̃) = ∂Σ(x, b)/∂b |_{b = x̃}` and
/// `Σ₍₂₎(x, x̃) = ∂²Σ(a, b)/∂a∂b |_{a = x, b = x̃}`.
///
/// Entry `(β, γ)` of `Σ₍₂₎` pairs coordinate `β` of `x` with `γ` of `x̃`.
pub fn sigma_grad_kernels(
    a: &[f64],
    b: &[f64],
    input_dim: usize,
    activation: KernelActivation,
) -> Result<(Vec<f64>, Array2<f64>)> {
    sigma_grad_kernels_with_eps(a, b, input_dim, activation, DEFAULT_EPS_CLAMP)
}

pub fn sigma_grad_kernels_with_eps(
    a: &[f64],
    b: &[f64],
    input_dim: usize,
    activation: KernelActivation,
    eps_clamp: f64,
) -> Result<(Vec<f64>, Array2<f64>)> {
    check_dim(input_dim)?;
    let g = pair_geometry(a, b, eps_clamp)?;
    let d = input_dim as f64;
    let n = a.len();
    match activation {
        KernelActivation::Linear => {
            let first = a.iter().map(|v| v / d).collect();
            let second = Array2::from_diag_elem(n, 1.0 / d);
            Ok((first, second))
        }
        KernelActivation::Relu => {
            if g.d_prod == 0.0 {
                return Err(Error::Degenerate("Σ derivatives at a zero-norm input".into()));
            }
            // With â, b̂ the unit vectors and s(λ) = √(1 − λ²)/2π:
            //   ∂Σ/∂b    = (Σ̇ a + |a| s b̂) / d
            //   ∂²Σ/∂a∂b = (Σ̇ I + h'' (b̂ − λâ)(â − λb̂)ᵀ + s â b̂ᵀ) / d,  h'' = 1/(2π√(1 − λ²))
            let lam = g.lambda;
            let slope = arccos_slope(lam);
            let s = g.sine() / (2.0 * PI);
            let curv = 1.0 / (2.0 * PI * g.sine());
            let ua: Vec<f64> = a.iter().map(|v| v / g.norm_a).collect();
            let ub: Vec<f64> = b.iter().map(|v| v / g.norm_b).collect();
            let first = (0..n)
                .map(|k| (slope * a[k] + g.norm_a * s * ub[k]) / d)
                .collect();
            let second = Array2::from_shape_fn((n, n), |(bi, gi)| {
                let diag = if bi == gi { slope } else { 0.0 };
                (diag
                    + curv * (ub[bi] - lam * ua[bi]) * (ua[gi] - lam * ub[gi])
                    + s * ua[bi] * ub[gi])
                    / d
            });
            Ok((first, second))
        }
    }
}

/// Kernels of a depth-`depth` linear MLP: `(depth·xᵀx̃/d, depth·x̃/d)`, i.e.
/// the NTK (`Θ` or `K`) and `Ξ`.
pub fn kernels_linear(a: &[f64], b: &[f64], input_dim: usize, depth: usize) -> Result<(f64, Vec<f64>)> {
    check_len("kernels_linear", a.len(), b.len())?;
    check_dim(input_dim)?;
    if depth == 0 {
        return Err(Error::invalid("depth must be at least 1"));
    }
    let scale = depth as f64 / input_dim as f64;
    Ok((scale * dot(a, b), b.iter().map(|v| scale * v).collect()))
}

/// Kernel family of one side of the bottleneck.
///
/// `depth` counts weight matrices. A ReLU network with `depth` matrices has
/// `depth − 1` hidden layers; a one-hidden-layer network has `depth = 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    pub activation: KernelActivation,
    pub input_dim: usize,
    pub depth: usize,
    pub eps_clamp: f64,
}

impl KernelConfig {
    pub fn relu(input_dim: usize) -> Self {
        KernelConfig {
            activation: KernelActivation::Relu,
            input_dim,
            depth: 2,
            eps_clamp: DEFAULT_EPS_CLAMP,
        }
    }

    pub fn linear(input_dim: usize, depth: usize) -> Self {
        KernelConfig {
            activation: KernelActivation::Linear,
            input_dim,
            depth,
            eps_clamp: DEFAULT_EPS_CLAMP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.input_dim)?;
        if self.depth == 0 {
            return Err(Error::invalid("kernel depth must be at least 1"));
        }
        check_eps(self.eps_clamp)
    }

    /// Whether `Ξ` is available: linear networks of any depth, ReLU networks
    /// with exactly one hidden layer.
    pub fn supports_xi(&self) -> bool {
        match self.activation {
            KernelActivation::Linear => true,
            KernelActivation::Relu => self.depth == 2,
        }
    }

    #[inline]
    pub fn geometry(&self, dot: f64, norm_a: f64, norm_b: f64) -> PairGeometry {
        PairGeometry::from_parts(dot, norm_a, norm_b, self.eps_clamp)
    }

    /// NTK value from a precomputed dot product and norms.
    #[inline]
    pub fn ntk_scalar(&self, dot: f64, norm_a: f64, norm_b: f64) -> f64 {
        match self.activation {
            KernelActivation::Linear => self.depth as f64 * dot / self.input_dim as f64,
            KernelActivation::Relu if self.depth == 2 => {
                relu_ntk_from_geometry(&self.geometry(dot, norm_a, norm_b), self.input_dim)
            }
            KernelActivation::Relu => deep::relu_recursion(
                dot,
                norm_a,
                norm_b,
                self.input_dim,
                self.depth - 1,
                self.eps_clamp,
            )
            .0,
        }
    }

    /// NNGP value of the network output (the covariance of its coordinates).
    #[inline]
    pub fn nngp_scalar(&self, dot: f64, norm_a: f64, norm_b: f64) -> f64 {
        match self.activation {
            KernelActivation::Linear => dot / self.input_dim as f64,
            KernelActivation::Relu => {
                deep::relu_recursion(dot, norm_a, norm_b, self.input_dim, self.depth - 1, self.eps_clamp).1
            }
        }
    }

    /// `(c_b, c_a)` with `Ξ(a, b) = c_b·b + c_a·a`.
    ///
    /// Callers must check [`supports_xi`](Self::supports_xi) and nonzero norms.
    #[inline]
    pub fn xi_coefficients(&self, dot: f64, norm_a: f64, norm_b: f64) -> (f64, f64) {
        match self.activation {
            KernelActivation::Linear => (self.depth as f64 / self.input_dim as f64, 0.0),
            KernelActivation::Relu => relu_xi_coefficients(&self.geometry(dot, norm_a, norm_b), self.input_dim),
        }
    }

    /// `(K, c_b, c_a)` in one pass; same preconditions as
    /// [`xi_coefficients`](Self::xi_coefficients).
    #[inline]
    pub fn ntk_xi_scalar(&self, dot: f64, norm_a: f64, norm_b: f64) -> (f64, f64, f64) {
        match self.activation {
            KernelActivation::Linear => {
                let scale = self.depth as f64 / self.input_dim as f64;
                (scale * dot, scale, 0.0)
            }
            KernelActivation::Relu => relu_ntk_xi(&self.geometry(dot, norm_a, norm_b), self.input_dim),
        }
    }

    pub fn ntk(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        check_len("ntk", a.len(), b.len())?;
        Ok(self.ntk_scalar(dot(a, b), norm(a), norm(b)))
    }

    pub fn nngp(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        check_len("nngp", a.len(), b.len())?;
        Ok(self.nngp_scalar(dot(a, b), norm(a), norm(b)))
    }

    pub fn xi(&self, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        check_len("xi", a.len(), b.len())?;
        if !self.supports_xi() {
            return Err(Error::invalid("Ξ is only defined for one-hidden-layer ReLU or linear networks"));
        }
        match self.activation {
            KernelActivation::Linear => Ok(kernels_linear(a, b, self.input_dim, self.depth)?.1),
            KernelActivation::Relu => xi_relu_with_eps(a, b, self.input_dim, self.eps_clamp),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn geometry_examples() {
        let g = pair_geometry(&[1.0, 0.0], &[0.0, 1.0], DEFAULT_EPS_CLAMP).unwrap();
        assert_eq!((g.dot, g.d_prod, g.lambda), (0.0, 1.0, 0.0));

        let g = pair_geometry(&[1.0, 1.0], &[1.0, 1.0], DEFAULT_EPS_CLAMP).unwrap();
        assert_abs_diff_eq!(g.d_prod, 2.0, epsilon = 1e-15);
        assert_eq!(g.lambda, 1.0 - DEFAULT_EPS_CLAMP);

        let g = pair_geometry(&[1.0, 1.0], &[1.0, 0.0], DEFAULT_EPS_CLAMP).unwrap();
        assert_abs_diff_eq!(g.d_prod, 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(g.lambda, 1.0 / 2f64.sqrt(), epsilon = 1e-15);

        let g = pair_geometry(&[0.0, 0.0], &[1.0, 2.0], DEFAULT_EPS_CLAMP).unwrap();
        assert_eq!((g.d_prod, g.lambda), (0.0, 0.0));

        assert!(pair_geometry(&[1.0], &[1.0, 2.0], DEFAULT_EPS_CLAMP).is_err());
        assert!(pair_geometry(&[1.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn sigma_examples() {
        let geom = |a: &[f64], b: &[f64]| pair_geometry(a, b, DEFAULT_EPS_CLAMP).unwrap();
        assert_abs_diff_eq!(sigma_relu(&geom(&[1.0, 1.0], &[1.0, 1.0]), 2).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(
            sigma_relu(&geom(&[1.0, 0.0], &[0.0, 1.0]), 2).unwrap(),
            1.0 / (4.0 * PI),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            sigma_relu(&geom(&[1.0, 1.0], &[1.0, 0.0]), 2).unwrap(),
            (0.75 * PI + 1.0) / (4.0 * PI),
            epsilon = 1e-14
        );
        assert_eq!(sigma_relu(&geom(&[0.0, 0.0], &[1.0, 0.0]), 2).unwrap(), 0.0);
        assert!(sigma_relu(&geom(&[1.0, 0.0], &[1.0, 0.0]), 0).is_err());
    }

    #[test]
    fn sigma_dot_examples() {
        let at = |lambda: f64| {
            sigma_dot_relu(&PairGeometry {
                dot: lambda,
                norm_a: 1.0,
                norm_b: 1.0,
                d_prod: 1.0,
                lambda,
                cosine: lambda,
            })
        };
        assert_abs_diff_eq!(at(1.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(at(0.0), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(at(1.0 / 2f64.sqrt()), 0.375, epsilon = 1e-15);
    }

    #[test]
    fn shallow_ntk_examples() {
        let xi = [1.0, -1.0, 1.0, 1.0];
        assert_abs_diff_eq!(ntk_relu_shallow(&xi, &xi, 4).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            ntk_relu_shallow(&[1.0, 0.0], &[0.0, 1.0], 2).unwrap(),
            1.0 / (4.0 * PI),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            ntk_relu_shallow(&[1.0, 1.0], &[1.0, 0.0], 2).unwrap(),
            0.5 * 0.375 + (0.75 * PI + 1.0) / (4.0 * PI),
            epsilon = 1e-14
        );
        assert!(ntk_relu_shallow(&[1.0], &[1.0, 0.0], 2).is_err());
        assert!(ntk_relu_shallow(&[1.0], &[1.0], 0).is_err());
    }

    #[test]
    fn xi_orthogonal_pair() {
        let v = xi_relu(&[1.0, 0.0], &[0.0, 1.0], 2).unwrap();
        assert_abs_diff_eq!(v[0], 1.0 / (4.0 * PI), epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn xi_rejects_zero_norm() {
        assert!(matches!(xi_relu(&[0.0, 0.0], &[0.0, 1.0], 2), Err(Error::Degenerate(_))));
        assert!(matches!(xi_relu(&[1.0, 0.0], &[0.0, 0.0], 2), Err(Error::Degenerate(_))));
    }

    #[test]
    fn xi_first_term_is_homogeneous_in_second_argument() {
        let x = [0.3, -1.2, 0.5];
        let y = [1.1, 0.4, -0.7];
        let c = 2.5;
        let g1 = pair_geometry(&x, &y, DEFAULT_EPS_CLAMP).unwrap();
        let yc: Vec<f64> = y.iter().map(|v| c * v).collect();
        let g2 = pair_geometry(&x, &yc, DEFAULT_EPS_CLAMP).unwrap();
        assert_abs_diff_eq!(g1.lambda, g2.lambda, epsilon = 1e-15);
        assert_eq!(sigma_dot_relu(&g1), sigma_dot_relu(&g2));
        // Ξ itself is then homogeneous of degree one in x̃.
        let a = xi_relu(&x, &y, 3).unwrap();
        let b = xi_relu(&x, &yc, 3).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert_abs_diff_eq!(c * u, *v, epsilon = 1e-13);
        }
    }

    #[test]
    fn xi_coefficients_match_vector_formula() {
        let x = [0.3, -1.2, 0.5, 2.0];
        let y = [1.1, 0.4, -0.7, 0.2];
        let v = xi_relu(&x, &y, 4).unwrap();
        let cfg = KernelConfig::relu(4);
        let (cb, ca) = cfg.xi_coefficients(dot(&x, &y), norm(&x), norm(&y));
        for k in 0..4 {
            assert_abs_diff_eq!(v[k], cb * y[k] + ca * x[k], epsilon = 1e-14);
        }
    }

    #[test]
    fn combined_ntk_xi_matches_parts() {
        let x = [0.3, -1.2, 0.5, 2.0];
        let y = [1.1, 0.4, -0.7, 0.2];
        let (dt, na, nb) = (dot(&x, &y), norm(&x), norm(&y));
        for cfg in [KernelConfig::relu(4), KernelConfig::linear(4, 3)] {
            let (k, cb, ca) = cfg.ntk_xi_scalar(dt, na, nb);
            assert_abs_diff_eq!(k, cfg.ntk_scalar(dt, na, nb), epsilon = 1e-15);
            let (cb2, ca2) = cfg.xi_coefficients(dt, na, nb);
            assert_eq!((cb, ca), (cb2, ca2));
        }
    }

    #[test]
    fn sigma_grads_linear() {
        let x = [1.0, 2.0, -3.0];
        let y = [0.5, 0.0, 1.0];
        let (s1, s2) = sigma_grad_kernels(&x, &y, 3, KernelActivation::Linear).unwrap();
        assert_eq!(s1, vec![1.0 / 3.0, 2.0 / 3.0, -1.0]);
        assert_eq!(s2, Array2::from_diag_elem(3, 1.0 / 3.0));
    }

    #[test]
    fn sigma_grads_on_diagonal() {
        let (s1, s2) = sigma_grad_kernels(&[1.0, 1.0], &[1.0, 1.0], 2, KernelActivation::Relu).unwrap();
        assert_abs_diff_eq!(s1[0], 0.25, epsilon = 1e-6);
        assert_abs_diff_eq!(s1[1], 0.25, epsilon = 1e-6);
        // Σ₍₂₎(x, x) = E[1(uᵀx > 0) u uᵀ]/d = I/(2d); the clamp costs O(√ε).
        assert_abs_diff_eq!(s2[[0, 0]], 0.25, epsilon = 1e-4);
        assert_abs_diff_eq!(s2[[0, 1]], 0.0, epsilon = 1e-4);
    }

    #[test]
    fn linear_kernel_examples() {
        assert_eq!(kernels_linear(&[1.0], &[1.0], 1, 1).unwrap(), (1.0, vec![1.0]));
        let xi = [1.0, 1.0];
        assert_eq!(kernels_linear(&xi, &xi, 2, 2).unwrap().0, 2.0);
        let (t, x) = kernels_linear(&[1.0, 0.0], &[0.0, 2.0], 2, 3).unwrap();
        assert_eq!(t, 0.0);
        assert_eq!(x, vec![0.0, 3.0]);
        assert!(kernels_linear(&[1.0], &[1.0], 1, 0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(KernelConfig::relu(3).validate().is_ok());
        assert!(KernelConfig::relu(0).validate().is_err());
        assert!(KernelConfig::linear(3, 0).validate().is_err());
        let mut c = KernelConfig::relu(3);
        c.eps_clamp = 1e-2;
        assert!(c.validate().is_err());
        let mut deep = KernelConfig::relu(3);
        deep.depth = 3;
        assert!(!deep.supports_xi());
        assert!(deep.xi(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).is_err());
    }
}
