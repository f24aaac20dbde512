//! Generated regression data.

use ndarray::{s, Array2, ArrayView2};
use rand::Rng;

use super::{Dataset, Split};
use crate::error::{Error, Result};
use crate::kernels::{pair_geometry, sigma_relu, DEFAULT_EPS_CLAMP};
use crate::oracle::gp_sample;
use crate::rng;

/// Width of the hidden GP layer of [`gen_synthetic_gp`].
pub const SYNTHETIC_HIDDEN: usize = 16;

fn sub_seed(seed: u64, index: u64) -> u64 {
    rng::stream(seed, index).random()
}

fn relu_nngp(input_dim: usize) -> impl Fn(&[f64], &[f64]) -> Result<f64> {
    move |a, b| sigma_relu(&pair_geometry(a, b, DEFAULT_EPS_CLAMP)?, input_dim)
}

/// Standard normal inputs with targets from a two-stage deep GP: 16 hidden
/// features drawn from the ReLU NNGP over the inputs, then `d_r` targets
/// drawn from the ReLU NNGP over those features. Train and test samples
/// share one draw.
pub fn gen_synthetic_gp(n_train: usize, n_test: usize, d0: usize, dr: usize, seed: u64) -> Result<Dataset> {
    if n_train == 0 || d0 == 0 || dr == 0 {
        return Err(Error::invalid("synthetic data needs N_train, d₀, d_r ≥ 1"));
    }
    let n = n_train + n_test;
    let mut input_rng = rng::stream(seed, 0);
    let x = rng::normal_matrix(&mut input_rng, n, d0);
    let hidden = gp_sample(relu_nngp(d0), x.view(), SYNTHETIC_HIDDEN, sub_seed(seed, 1), 0.0)?;
    let targets = gp_sample(relu_nngp(SYNTHETIC_HIDDEN), hidden.values.view(), dr, sub_seed(seed, 2), 0.0)?;
    let y = targets.values;
    let train = Split::new(x.slice(s![..n_train, ..]).to_owned(), y.slice(s![..n_train, ..]).to_owned())?;
    let test = Split::new(x.slice(s![n_train.., ..]).to_owned(), y.slice(s![n_train.., ..]).to_owned())?;
    Dataset::from_splits("synthetic", train, test, false)
}

/// The frozen `d_r × d₀` standard normal projection for `seed`.
pub fn projection_matrix(d0: usize, dr: usize, seed: u64) -> Array2<f64> {
    rng::normal_matrix(&mut rng::stream(seed, 0), dr, d0)
}

/// Targets `y = P ξ / √d₀` for every input row.
pub fn gen_projection_labels(inputs: ArrayView2<'_, f64>, dr: usize, seed: u64) -> Result<Array2<f64>> {
    if inputs.nrows() == 0 || inputs.ncols() == 0 || dr == 0 {
        return Err(Error::invalid("projection labels need nonempty inputs"));
    }
    let p = projection_matrix(inputs.ncols(), dr, seed);
    Ok(project(inputs, &p))
}

/// Standard normal inputs with random-projection targets. The training
/// inputs are the first `n_train` rows drawn from stream 10 of `seed`.
pub fn gen_projection_problem(n_train: usize, n_test: usize, d0: usize, dr: usize, seed: u64) -> Result<Dataset> {
    if n_train == 0 || d0 == 0 || dr == 0 {
        return Err(Error::invalid("projection data needs N_train, d₀, d_r ≥ 1"));
    }
    let x = rng::normal_matrix(&mut rng::stream(seed, 10), n_train + n_test, d0);
    let y = gen_projection_labels(x.view(), dr, seed)?;
    let train = Split::new(x.slice(s![..n_train, ..]).to_owned(), y.slice(s![..n_train, ..]).to_owned())?;
    let test = Split::new(x.slice(s![n_train.., ..]).to_owned(), y.slice(s![n_train.., ..]).to_owned())?;
    Dataset::from_splits("projection", train, test, false)
}

pub(crate) fn project(inputs: ArrayView2<'_, f64>, p: &Array2<f64>) -> Array2<f64> {
    inputs.dot(&p.t()) / (inputs.ncols() as f64).sqrt()
}
