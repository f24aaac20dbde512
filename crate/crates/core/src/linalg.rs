//! Small dense helpers shared by the kernel and training code.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Euclidean norm of every row.
pub fn row_norms(m: ArrayView2<'_, f64>) -> Array1<f64> {
    m.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect()
}

pub fn frobenius(m: ArrayView2<'_, f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn to_nalgebra(m: ArrayView2<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

pub fn from_nalgebra(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: ArrayView2<'_, f64>) -> Vec<f64> {
    let eig = nalgebra::SymmetricEigen::new(to_nalgebra(m));
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Lower Cholesky factor of `gram + jitter * I`.
///
/// The jitter starts at `initial` (or `1e-10 * trace / dim` when `None`) and
/// doubles at most 20 times while it stays below `max_jitter`. Returns the
/// factor and the jitter that was used. An all-zero gram factors to zero.
pub fn cholesky_with_jitter(
    gram: ArrayView2<'_, f64>,
    initial: Option<f64>,
    max_jitter: f64,
) -> Result<(Array2<f64>, f64)> {
    let n = gram.nrows();
    if n != gram.ncols() {
        return Err(Error::invalid("gram matrix must be square"));
    }
    if gram.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gram matrix".into()));
    }
    if gram.iter().all(|&v| v == 0.0) {
        return Ok((Array2::zeros((n, n)), 0.0));
    }
    let trace: f64 = (0..n).map(|i| gram[[i, i]]).sum();
    let mut jitter = initial.unwrap_or(1e-10 * trace / n as f64).max(f64::MIN_POSITIVE);
    let base = to_nalgebra(gram);
    for _ in 0..=20 {
        let mut m = base.clone();
        for i in 0..n {
            m[(i, i)] += jitter;
        }
        if let Some(chol) = m.cholesky() {
            return Ok((from_nalgebra(&chol.l()), jitter));
        }
        if jitter * 2.0 > max_jitter {
            break;
        }
        jitter *= 2.0;
    }
    Err(Error::NotPsd { jitter })
}
