//! Random initial functions.
//!
//! A [`WideNetSnapshot`] freezes one draw of a wide network `f ∘ g` and
//! answers `g₀(ξ)`, `F₀(ξ)` and `J₀(x)` at any query point, which is how the
//! function-space trainer gets consistent initial values at embeddings that
//! only appear during training. [`gp_sample`] draws exact Gaussian-process
//! values on a fixed point set instead.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array2, ArrayView2};

use crate::activation::Activation;
use crate::error::{check_len, Error, Result};
use crate::finite::Mlp;
use crate::linalg::cholesky_with_jitter;
use crate::rng;

pub const DEFAULT_WIDTH: usize = 10_000;
const MAGIC: &[u8; 4] = b"WNS1";

/// A frozen wide network `F₀ = f₀ ∘ g₀`.
///
/// `g` has `depth_g` weight matrices `θ¹ … θ^{L_g}` (hidden width `n`,
/// output `d`), `f` is `v φ(u x / √d) / √n`. Weights are stored rounded to
/// `f32`, so a saved snapshot reloads bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct WideNetSnapshot {
    pub g: Mlp,
    pub f: Mlp,
    pub width: usize,
    pub seed: u64,
}

fn round_f32(m: Array2<f64>) -> Array2<f64> {
    m.mapv(|v| v as f32 as f64)
}

/// Draws a snapshot with input dimension `dims.0`, bottleneck `dims.1` and
/// output `dims.2`.
pub fn init_wide_net(
    dims: (usize, usize, usize),
    depth_g: usize,
    activation: Activation,
    width: usize,
    seed: u64,
) -> Result<WideNetSnapshot> {
    let (d0, d, dr) = dims;
    if d0 == 0 || d == 0 || dr == 0 || width == 0 || depth_g == 0 {
        return Err(Error::invalid("snapshot dimensions, width and depth must be positive"));
    }
    let mut g_dims = vec![d0];
    g_dims.extend(std::iter::repeat_n(width, depth_g - 1));
    g_dims.push(d);
    let mut rng = rng::stream(seed, 0);
    let g_weights = g_dims
        .windows(2)
        .map(|w| round_f32(rng::normal_matrix(&mut rng, w[1], w[0])))
        .collect();
    let u = round_f32(rng::normal_matrix(&mut rng, width, d));
    let v = round_f32(rng::normal_matrix(&mut rng, dr, width));
    Ok(WideNetSnapshot {
        g: Mlp::from_weights(g_weights, activation)?,
        f: Mlp::from_weights(vec![u, v], activation)?,
        width,
        seed,
    })
}

impl WideNetSnapshot {
    pub fn input_dim(&self) -> usize {
        self.g.input_dim()
    }

    pub fn bottleneck_dim(&self) -> usize {
        self.g.output_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.f.output_dim()
    }

    pub fn activation(&self) -> Activation {
        self.g.activation
    }

    pub fn depth_g(&self) -> usize {
        self.g.depth()
    }

    /// `(g₀(ξ), F₀(ξ))`.
    pub fn eval(&self, xi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let g = self.g.forward(xi)?;
        let f = self.f.forward(&g)?;
        Ok((g, f))
    }

    /// `(G₀, F₀)` for a batch of inputs, one per row.
    pub fn eval_batch(&self, xi: ArrayView2<'_, f64>) -> Result<(Array2<f64>, Array2<f64>)> {
        let g = self.g.forward_batch(xi)?;
        let f = self.f.forward_batch(g.view())?;
        Ok((g, f))
    }

    /// `f₀(x)` at a bottleneck point.
    pub fn eval_f(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.f.forward(x)
    }

    pub fn eval_f_batch(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.f.forward_batch(x)
    }

    /// `J₀(x) = ∂f₀/∂x`, shape `d_r × d`.
    pub fn jacobian(&self, x: &[f64]) -> Result<Array2<f64>> {
        self.f.jacobian(x)
    }

    /// Rows `J₀(x_b)ᵀ χ_b` without forming the Jacobians.
    pub fn jacobian_transpose_product(&self, x: ArrayView2<'_, f64>, chi: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.f.vjp_batch(x, chi)
    }

    /// Rows `J₀(x_b) v_b`.
    pub fn jacobian_vector_product(&self, x: ArrayView2<'_, f64>, v: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.f.jvp_batch(x, v)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        let (code, param) = self.activation().code();
        w.write_all(MAGIC)?;
        for v in [
            self.input_dim(),
            self.bottleneck_dim(),
            self.output_dim(),
            self.width,
            self.depth_g(),
            self.f.depth(),
        ] {
            w.write_u32::<LittleEndian>(to_u32(v)?)?;
        }
        w.write_u32::<LittleEndian>(code)?;
        w.write_f32::<LittleEndian>(param)?;
        w.write_u64::<LittleEndian>(self.seed)?;
        for m in self.g.weights.iter().chain(&self.f.weights) {
            for &v in m.iter() {
                w.write_f32::<LittleEndian>(v as f32)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a WNS1 snapshot".into()));
        }
        let mut header = [0usize; 6];
        for h in header.iter_mut() {
            *h = r.read_u32::<LittleEndian>()? as usize;
        }
        let [d0, d, dr, width, depth_g, depth_f] = header;
        if depth_f != 2 || depth_g == 0 || d0 == 0 || d == 0 || dr == 0 || width == 0 {
            return Err(Error::Format(format!("unsupported snapshot header {header:?}")));
        }
        let code = r.read_u32::<LittleEndian>()?;
        let param = r.read_f32::<LittleEndian>()?;
        let activation =
            Activation::from_code(code, param).ok_or_else(|| Error::Format(format!("unknown activation code {code}")))?;
        let seed = r.read_u64::<LittleEndian>()?;

        let mut g_dims = vec![d0];
        g_dims.extend(std::iter::repeat_n(width, depth_g - 1));
        g_dims.push(d);
        let mut read_block = |rows: usize, cols: usize| -> Result<Array2<f64>> {
            let mut buf = vec![0f32; rows * cols];
            r.read_f32_into::<LittleEndian>(&mut buf)?;
            Ok(Array2::from_shape_vec((rows, cols), buf.into_iter().map(f64::from).collect()).expect("block shape"))
        };
        let mut g_weights = Vec::with_capacity(depth_g);
        for w in g_dims.windows(2) {
            g_weights.push(read_block(w[1], w[0])?);
        }
        let u = read_block(width, d)?;
        let v = read_block(dr, width)?;
        Ok(WideNetSnapshot {
            g: Mlp::from_weights(g_weights, activation)?,
            f: Mlp::from_weights(vec![u, v], activation)?,
            width,
            seed,
        })
    }
}

fn to_u32(v: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit a u32 header field")))
}

/// Values of a centered GP drawn on a fixed point set.
#[derive(Debug, Clone)]
pub struct GpSampleSet {
    pub points: Array2<f64>,
    /// `points × out_dim`, coordinates independent.
    pub values: Array2<f64>,
    pub chol_jitter: f64,
}

/// Largest diagonal jitter tried before giving up on a gram matrix.
pub const MAX_JITTER: f64 = 1e-4;

/// Draws `out_dim` independent GP coordinates `chol(G + jitter I) Z` on the
/// rows of `points`. A `jitter` of zero picks the default starting value.
pub fn gp_sample<K>(kernel: K, points: ArrayView2<'_, f64>, out_dim: usize, seed: u64, jitter: f64) -> Result<GpSampleSet>
where
    K: Fn(&[f64], &[f64]) -> Result<f64>,
{
    let n = points.nrows();
    if n == 0 || out_dim == 0 {
        return Err(Error::invalid("gp_sample needs at least one point and one output"));
    }
    let rows: Vec<Vec<f64>> = points.rows().into_iter().map(|r| r.to_vec()).collect();
    let mut gram = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let k = kernel(&rows[i], &rows[j])?;
            gram[[i, j]] = k;
            gram[[j, i]] = k;
        }
    }
    gp_sample_from_gram(gram.view(), points, out_dim, seed, jitter)
}

/// [`gp_sample`] with a precomputed gram matrix.
pub fn gp_sample_from_gram(
    gram: ArrayView2<'_, f64>,
    points: ArrayView2<'_, f64>,
    out_dim: usize,
    seed: u64,
    jitter: f64,
) -> Result<GpSampleSet> {
    check_len("gram rows", points.nrows(), gram.nrows())?;
    let initial = (jitter > 0.0).then_some(jitter);
    let (chol, used) = cholesky_with_jitter(gram, initial, MAX_JITTER)?;
    let mut rng = rng::stream(seed, 0);
    let z = rng::normal_matrix(&mut rng, points.nrows(), out_dim);
    Ok(GpSampleSet {
        points: points.to_owned(),
        values: chol.dot(&z),
        chol_jitter: used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn same_seed_same_snapshot() {
        let a = init_wide_net((3, 2, 2), 2, Activation::Relu, 50, 4).unwrap();
        let b = init_wide_net((3, 2, 2), 2, Activation::Relu, 50, 4).unwrap();
        assert_eq!(a, b);
        let c = init_wide_net((3, 2, 2), 2, Activation::Relu, 50, 5).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_unit_linear_by_hand() {
        let s = init_wide_net((1, 1, 1), 1, Activation::Linear, 1, 2).unwrap();
        let theta = s.g.weights[0][[0, 0]];
        let (u, v) = (s.f.weights[0][[0, 0]], s.f.weights[1][[0, 0]]);
        let (g, f) = s.eval(&[1.5]).unwrap();
        assert_eq!(g, vec![theta * 1.5]);
        assert_abs_diff_eq!(f[0], v * u * theta * 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.jacobian(&[0.3]).unwrap()[[0, 0]], u * v, epsilon = 1e-12);
    }

    #[test]
    fn two_unit_linear_scalings() {
        let s = init_wide_net((2, 1, 1), 2, Activation::Linear, 2, 8).unwrap();
        let xi = [0.7, -1.2];
        let (t1, t2) = (&s.g.weights[0], &s.g.weights[1]);
        let expected = t2.dot(&t1.dot(&array![0.7, -1.2])) / (2.0f64 * 2.0).sqrt();
        let (g, f) = s.eval(&xi).unwrap();
        assert_abs_diff_eq!(g[0], expected[0], epsilon = 1e-12);
        assert_eq!(f, s.eval_f(&g).unwrap());
    }

    #[test]
    fn zero_input_relu() {
        let s = init_wide_net((4, 3, 2), 2, Activation::Relu, 20, 1).unwrap();
        let (g, f) = s.eval(&[0.0; 4]).unwrap();
        assert_eq!(g, vec![0.0; 3]);
        assert_eq!(f, s.eval_f(&[0.0; 3]).unwrap());
    }

    #[test]
    fn transpose_product_matches_jacobian() {
        let s = init_wide_net((2, 3, 2), 2, Activation::Relu, 64, 3).unwrap();
        let x = array![[0.3, -0.4, 1.0], [1.0, 0.2, -0.5]];
        let chi = array![[1.0, 2.0], [-0.5, 0.25]];
        let p = s.jacobian_transpose_product(x.view(), chi.view()).unwrap();
        for b in 0..2 {
            let j = s.jacobian(x.row(b).as_slice().unwrap()).unwrap();
            let expected = j.t().dot(&chi.row(b));
            for k in 0..3 {
                assert_abs_diff_eq!(p[[b, k]], expected[k], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn wns1_round_trip() {
        let s = init_wide_net((3, 2, 2), 2, Activation::Softplus { sharpness: 5.0 }, 16, 11).unwrap();
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"WNS1");
        let back = WideNetSnapshot::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back, s);
        buf[0] = b'X';
        assert!(WideNetSnapshot::read_from(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn gp_sample_edge_cases() {
        let pts = array![[1.0, 0.0], [1.0, 0.0]];
        let s = gp_sample(|a, b| Ok(crate::linalg::dot(a, b)), pts.view(), 3, 1, 0.0).unwrap();
        for k in 0..3 {
            let (a, b) = (s.values[[0, k]], s.values[[1, k]]);
            assert!((a - b).abs() <= 1e-3 * a.abs().max(b.abs()).max(1e-12));
        }
        let zero = gp_sample(|_, _| Ok(0.0), pts.view(), 2, 1, 0.0).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
        assert!(gp_sample(|_, _| Ok(-1.0), array![[1.0]].view(), 1, 1, 0.0).is_err());
    }
}
